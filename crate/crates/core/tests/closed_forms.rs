//! Closed-form values against constants evaluated independently at 50-digit
//! precision, plus exhaustive property grids.

use mtgai::bounds::{
    asymptotic_constant, auto_epsilon0, detect_regime, lower_bound, pinsker_constant, t_i,
    upper_bound, upper_bound_good, upper_bound_no_good, BoundInputs, LowerBoundInputs, Regime,
};
use mtgai::environments::{medical_environment, synthetic_environment, MEDICAL_THRESHOLDS, SYNTHETIC_THRESHOLDS};
use mtgai::primitives::{
    alpha, binary_relative_entropy, confidence_bounds, gap, ucb_index, ProblemSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REL: f64 = 1e-12;

fn assert_rel(actual: f64, expected: f64, what: &str) {
    let err = ((actual - expected) / expected).abs();
    assert!(err <= REL, "{what}: {actual} vs {expected} (rel err {err:e})");
}

fn spec(k: usize, xi: Vec<f64>, delta: f64, eps: f64, sigma: f64) -> ProblemSpec {
    ProblemSpec::new(k, xi, delta, eps, sigma).unwrap()
}

#[test]
fn alpha_constants() {
    let a = |tau| alpha(tau, 0.05, 10, 4, 1.2).unwrap();
    assert_rel(a(100), 0.701_477_745_891_510_274_538_820_587_722_087_16, "alpha(100)");
    assert_rel(a(2), 3.651_975_512_434_147_242_922_6, "alpha(2)");
    assert_rel(a(3), 3.109_626_414_300_187_900_069_9, "alpha(3)");
    assert_rel(a(10), 1.895_895_900_688_055_257_684_9, "alpha(10)");
    assert!(a(2) > a(3) && a(3) > a(10));
}

#[test]
fn ucb_index_constant() {
    let v = ucb_index(0.2, 16, 10, 4, 1.2).unwrap();
    assert_rel(v, -0.878_454_575_651_505_665_813_226_08, "ucb_index");
}

#[test]
fn entropy_constants() {
    assert_rel(
        binary_relative_entropy(0.5, 0.25).unwrap(),
        0.143_841_036_225_890_463_719_609_50,
        "d(0.5,0.25)",
    );
    assert_rel(
        binary_relative_entropy(0.6, 0.5).unwrap(),
        0.020_135_513_550_688_873_420_512_779,
        "d(0.6,0.5)",
    );
}

#[test]
fn gap_and_pinsker_constants() {
    let v = gap(&[0.2, 0.7, 0.8, 0.6], &SYNTHETIC_THRESHOLDS).unwrap();
    assert_rel(v.value(), 0.4, "synthetic arm 10");
    assert_eq!(pinsker_constant(&SYNTHETIC_THRESHOLDS).unwrap(), 0.4);
    assert_eq!(pinsker_constant(&MEDICAL_THRESHOLDS).unwrap(), 0.25);
    assert_eq!(pinsker_constant(&[0.5, 0.5, 0.5]).unwrap(), 0.5);
}

#[test]
fn t_i_constant() {
    let s = spec(10, vec![0.5; 4], 0.05, 0.1, 1.2);
    let v = t_i(0.05, 0.0, &s, Regime::GoodArmExists).unwrap();
    assert_rel(v, 41_095.036_003_049_054_461_186_995, "t_i");
}

#[test]
fn no_good_bound_fixture() {
    let s = spec(3, vec![0.5; 2], 0.05, 0.1, 1.0);
    let gaps = vec![0.3, 0.45, 0.6];
    let inputs = BoundInputs::new(s, gaps, 0.05, Regime::NoEpsGoodArm).unwrap();
    let ts = inputs.per_arm_t().unwrap();
    let expected = [
        2_312.942_424_601_042_211_388_655_8,
        504.424_678_019_134_959_668_515_92,
        204.135_928_570_994_354_303_968_26,
    ];
    for (t, e) in ts.iter().zip(expected) {
        assert_rel(*t, e, "t_i no-good");
    }
    assert_rel(
        upper_bound_no_good(&inputs).unwrap(),
        5_421.503_031_191_171_525_361_140_0,
        "no-good bound",
    );
}

#[test]
fn good_bound_fixture() {
    let s = spec(4, vec![0.5; 2], 0.05, 0.1, 0.9);
    let gaps = vec![-0.2, -0.05, 0.4, 0.6];
    let inputs = BoundInputs::new(s, gaps, 0.04, Regime::GoodArmExists).unwrap();
    let ts = inputs.per_arm_t().unwrap();
    let expected = [
        562.195_928_819_785_198_746_64,
        3_688.802_475_410_218_073_963_7,
        562.195_928_819_785_198_746_64,
        157.614_071_472_984_229_025_77,
    ];
    for (t, e) in ts.iter().zip(expected) {
        assert_rel(*t, e, "t_i good");
    }
    assert_rel(
        upper_bound_good(&inputs).unwrap(),
        53_048.843_649_540_621_949_309,
        "good bound",
    );
}

#[test]
fn lower_bound_constants() {
    let single = LowerBoundInputs::new(vec![vec![0.6]], vec![0.5], 0.01).unwrap();
    assert_rel(
        lower_bound(&single, Regime::GoodArmExists).unwrap(),
        193.788_104_564_864_727_980_70,
        "single-arm lower bound",
    );
    let env = medical_environment();
    let med = LowerBoundInputs::new(env.means().to_vec(), MEDICAL_THRESHOLDS.to_vec(), 0.01).unwrap();
    assert_rel(
        lower_bound(&med, Regime::GoodArmExists).unwrap(),
        19.683_275_639_836_409_936_457,
        "medical lower bound",
    );
}

#[test]
fn medical_auto_bound() {
    let env = medical_environment();
    let gaps: Vec<f64> = env
        .true_gaps(&MEDICAL_THRESHOLDS)
        .unwrap()
        .iter()
        .map(|g| g.value())
        .collect();
    let s = spec(5, MEDICAL_THRESHOLDS.to_vec(), 0.01, 0.0, 1.0);
    let regime = detect_regime(&gaps, 0.0).unwrap();
    assert_eq!(regime, Regime::GoodArmExists);
    let (e0, bound) = auto_epsilon0(&s, &gaps, regime).unwrap();
    assert_rel(e0, 0.011_875, "medical eps0");
    assert_rel(bound, 1_070_760.738_772_566_510_027_822_1, "medical upper bound");
    let inputs = BoundInputs::new(s, gaps, e0, regime).unwrap();
    assert_rel(
        asymptotic_constant(&inputs).unwrap(),
        88.062_538_161_866_513_015_883_936,
        "medical asymptotic constant",
    );
}

#[test]
fn synthetic_auto_bound() {
    let env = synthetic_environment();
    let gaps: Vec<f64> = env
        .true_gaps(&SYNTHETIC_THRESHOLDS)
        .unwrap()
        .iter()
        .map(|g| g.value())
        .collect();
    let s = spec(10, SYNTHETIC_THRESHOLDS.to_vec(), 0.05, 0.005, 1.2);
    let (e0, bound) = auto_epsilon0(&s, &gaps, Regime::GoodArmExists).unwrap();
    assert_rel(e0, 0.003_311_092_508_114_679_912_581_2, "synthetic eps0");
    assert_rel(bound, 245_000_804.787_801_559_216_170_04, "synthetic upper bound");
}

#[test]
fn sigma_zero_collapses() {
    let s = spec(3, vec![0.5; 2], 0.05, 0.1, 0.0);
    let good = BoundInputs::new(s.clone(), vec![-0.1, 0.3, 0.5], 0.05, Regime::GoodArmExists).unwrap();
    let e0: f64 = 0.05;
    let residual = 27.0 * 2.0 / (2.0 * e0 * e0) * (4.0 * e0 * e0).exp();
    assert_rel(upper_bound(&good).unwrap(), residual, "sigma=0 good bound");
    assert_eq!(asymptotic_constant(&good).unwrap(), 0.0);
    let none = BoundInputs::new(s, vec![0.3, 0.4, 0.5], 0.05, Regime::NoEpsGoodArm).unwrap();
    assert_eq!(upper_bound(&none).unwrap(), 0.0);
}

#[test]
fn single_arm_structures() {
    let s = spec(1, vec![0.5; 3], 0.05, 0.1, 0.7);
    let e0: f64 = 0.02;
    let good = BoundInputs::new(s.clone(), vec![-0.1], e0, Regime::GoodArmExists).unwrap();
    let t = t_i(e0, -0.1, &s, Regime::GoodArmExists).unwrap();
    let expected = t + 4.0 * 3.0 * 0.49 / (e0 * e0) + 3.0 / (2.0 * e0 * e0) * (4.0 * e0 * e0).exp();
    assert_rel(upper_bound(&good).unwrap(), expected, "K=1 good");
    let none = BoundInputs::new(s.clone(), vec![0.4], e0, Regime::NoEpsGoodArm).unwrap();
    let t = t_i(e0, 0.4, &s, Regime::NoEpsGoodArm).unwrap();
    assert_rel(upper_bound(&none).unwrap(), t + 3.0 * 0.49 / (e0 * e0), "K=1 no-good");
}

#[test]
fn asymptotic_constant_scaling() {
    let c = |sigma: f64| {
        let s = spec(2, vec![0.5], 0.05, 0.1, sigma);
        let inputs = BoundInputs::new(s, vec![-0.05, 0.6], 0.05, Regime::GoodArmExists).unwrap();
        asymptotic_constant(&inputs).unwrap()
    };
    // epsilon - g* - eps0 = 0.1
    assert_rel(c(1.0), 400.0, "constant at sigma=1");
    assert_rel(c(2.0), 4.0 * c(1.0), "sigma doubling");
}

#[test]
fn lipschitz_gap_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11);
    let mut checked = 0;
    for &m in &[1usize, 2, 4, 8] {
        for _ in 0..2_500 {
            let xi: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
            let mu: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let mu_hat: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let lhs = (gap(&mu, &xi).unwrap().value() - gap(&mu_hat, &xi).unwrap().value()).abs();
            let rhs = mu
                .iter()
                .zip(&mu_hat)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(lhs <= rhs + 1e-15, "M={m}: {lhs} > {rhs}");
            checked += 1;
        }
    }
    assert!(checked >= 10_000);
}

#[test]
fn gap_matches_brute_force_on_quarter_grids() {
    let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
    for m in 1..=4usize {
        let count = levels.len().pow(m as u32);
        for code_mu in 0..count {
            for code_xi in 0..count {
                let pick = |mut c: usize| -> Vec<f64> {
                    (0..m)
                        .map(|_| {
                            let v = levels[c % levels.len()];
                            c /= levels.len();
                            v
                        })
                        .collect()
                };
                let (mu, xi) = (pick(code_mu), pick(code_xi));
                let mut best = f64::NEG_INFINITY;
                for j in 0..m {
                    if xi[j] - mu[j] > best {
                        best = xi[j] - mu[j];
                    }
                }
                assert_eq!(gap(&mu, &xi).unwrap().value(), best);
            }
        }
    }
    // M = 5..8: grid over mu with a fixed threshold pattern
    for m in 5..=8usize {
        let xi: Vec<f64> = (0..m).map(|j| levels[j % levels.len()]).collect();
        let count = levels.len().pow(m as u32).min(100_000);
        for code in 0..count {
            let mut c = code;
            let mu: Vec<f64> = (0..m)
                .map(|_| {
                    let v = levels[c % levels.len()];
                    c /= levels.len();
                    v
                })
                .collect();
            let best = (0..m).map(|j| xi[j] - mu[j]).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(gap(&mu, &xi).unwrap().value(), best);
        }
    }
}

#[test]
fn pinsker_grid() {
    for i in 0..=100 {
        for j in 0..=100 {
            let (x, y) = (i as f64 / 100.0, j as f64 / 100.0);
            if !(0.0 < x && x < 1.0 && 0.0 < y && y < 1.0) {
                continue;
            }
            let d = binary_relative_entropy(x, y).unwrap();
            assert!(d >= 2.0 * (x - y) * (x - y) - 1e-15, "d({x},{y}) = {d}");
        }
    }
}

#[test]
fn entropy_sandwich() {
    for i in 1..=9 {
        for j in 1..=9 {
            let (mu, xi) = (i as f64 / 10.0, j as f64 / 10.0);
            let g = xi - mu;
            if g <= 0.0 {
                continue;
            }
            let d = binary_relative_entropy(mu, xi).unwrap();
            let a = pinsker_constant(&[xi]).unwrap();
            assert!(2.0 * g * g <= d + 1e-15, "lower side at mu={mu}, xi={xi}");
            assert!(d <= 2.0 * g * g / a + 1e-15, "upper side at mu={mu}, xi={xi}");
        }
    }
}

#[test]
fn t_i_nonincreasing_in_a() {
    let s = spec(4, vec![0.5; 2], 0.05, 0.2, 1.0);
    // a = epsilon - g - eps0 = 0.3 - eps0
    let mut prev = f64::INFINITY;
    for k in 1..=200 {
        let a = 0.001 * k as f64;
        let t = t_i(0.3 - a, -0.1, &s, Regime::GoodArmExists).unwrap();
        assert!(t <= prev, "t_i increased at a = {a}");
        prev = t;
    }
}

#[test]
fn good_bound_finite_on_valid_grid() {
    let env = medical_environment();
    let gaps: Vec<f64> = env.true_gaps(&MEDICAL_THRESHOLDS).unwrap().iter().map(|g| g.value()).collect();
    let s = spec(5, MEDICAL_THRESHOLDS.to_vec(), 0.05, 0.01, 1.0);
    for k in 1..=49 {
        let e0 = 0.0225 * k as f64 / 50.0;
        let inputs = BoundInputs::new(s.clone(), gaps.clone(), e0, Regime::GoodArmExists).unwrap();
        let b = upper_bound(&inputs).unwrap();
        assert!(b.is_finite() && b > 0.0, "eps0 = {e0}: {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn confidence_bounds_centered(g in -1.5f64..1.5, tau in 1u64..100_000, delta in 0.001f64..0.999,
                                  sigma in 0.0f64..3.0, k in 1usize..20, m in 1usize..8) {
        let s = ProblemSpec::new(k, vec![0.5; m], delta, 0.0, sigma).unwrap();
        let iv = confidence_bounds(g, tau, &s).unwrap();
        prop_assert!(iv.lower <= g && g <= iv.upper);
        prop_assert!((iv.midpoint() - g).abs() <= 4.0 * f64::EPSILON * (1.0 + iv.upper.abs()));
    }

    #[test]
    fn ucb_index_below_estimate(g in -1.5f64..1.5, tau in 1u64..100_000, sigma in 0.0f64..3.0,
                                k in 1usize..20, m in 1usize..8) {
        prop_assume!((k * m) as u64 * tau >= 3);
        let v = ucb_index(g, tau, k, m, sigma).unwrap();
        if sigma == 0.0 {
            prop_assert_eq!(v, g);
        } else {
            prop_assert!(v < g);
        }
    }
}
