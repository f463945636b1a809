use effq_core::sim::{user_channel, user_codebook};
use effq_core::{run_experiment, BitsRule, CodebookPolicy, ExperimentConfig};

fn config(n: usize, bits: u32) -> ExperimentConfig {
    ExperimentConfig {
        m: 4,
        n,
        snr_db: vec![5.0, 15.0],
        bits_rule: BitsRule::Fixed { bits },
        trials: 400,
        seed: 17,
        codebook_policy: CodebookPolicy::PerBlock,
    }
}

#[test]
fn common_random_numbers_across_receive_antennas() {
    let (one, two) = (config(1, 4), config(2, 4));
    for t in [0, 5, 399] {
        for u in 0..4 {
            let a = user_channel(&one, t, u);
            let b = user_channel(&two, t, u);
            assert_eq!(a.column(0), b.column(0));
        }
    }
}

#[test]
fn codebooks_are_prefixes_across_bits() {
    let c = config(2, 4);
    let small = user_codebook(&c, 3, 1, 4).unwrap();
    let large = user_codebook(&c, 3, 1, 7).unwrap();
    for i in 0..small.len() {
        assert_eq!(small.vector(i), large.vector(i));
    }
}

#[test]
fn more_feedback_shrinks_the_gap() {
    let coarse = run_experiment(&config(2, 2)).unwrap();
    let fine = run_experiment(&config(2, 10)).unwrap();
    for (c, f) in coarse.points.iter().zip(&fine.points) {
        assert_eq!(c.rate_zf_mean, f.rate_zf_mean);
        assert!(f.gap < c.gap, "{} dB: {} vs {}", c.snr_db, f.gap, c.gap);
        assert!(f.mean_sin_sq < c.mean_sin_sq);
    }
    // interference from coarse feedback grows with power
    assert!(coarse.points[1].gap > coarse.points[0].gap);
}

#[test]
fn combining_beats_a_single_antenna_at_equal_bits() {
    let one = run_experiment(&config(1, 6)).unwrap();
    let two = run_experiment(&config(2, 6)).unwrap();
    for (a, b) in one.points.iter().zip(&two.points) {
        assert!(b.mean_sin_sq < a.mean_sin_sq);
        assert!(b.rate_fb_mean > a.rate_fb_mean - a.rate_fb_ci.unwrap());
    }
}
