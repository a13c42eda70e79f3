use proptest::prelude::*;

use spherecone::finance::{OptionKind, OptionSpec};
use spherecone::io::{read_rows, write_rows};
use spherecone::lds::SobolStream;
use spherecone::specfun::{inv_reg_gamma_p, reg_beta_i, reg_gamma_p, reg_gamma_q};
use spherecone::spheremap::{cap_measure, map_to_sphere, Lift, SpacePoint};
use spherecone::wce::{wce_isotropic_general, wce_nakagami, KernelParams, NakagamiModel};

fn unit_cube(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..1.0f64, dim)
}

fn kernel() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.3..5.0f64, 0.2..3.0f64, 1.05..4.0f64).prop_map(|(mu, a, ratio)| (mu, a, a * ratio))
}

fn cloud(ambient: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-3.0..3.0f64, ambient), 1..12)
}

fn to_points(v: &[Vec<f64>]) -> Vec<SpacePoint> {
    v.iter().map(|x| SpacePoint::from_cartesian(x).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_map_lands_on_sphere(x in (1usize..12).prop_flat_map(unit_cube)) {
        let y = map_to_sphere(&x).unwrap();
        let n: f64 = y.coords().iter().map(|v| v * v).sum();
        prop_assert!((n - 1.0).abs() < 1e-12);
        prop_assert_eq!(y.ambient_dim(), x.len() + 1);
    }

    #[test]
    fn lift_radius_is_monotone(d in 2usize..40, u in 0.0..0.999f64, v in 0.0..0.999f64) {
        let lift = Lift::new(d).unwrap();
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        prop_assert!(lift.radius(lo).unwrap() <= lift.radius(hi).unwrap());
    }

    #[test]
    fn gamma_tails_sum_to_one(a in 0.1..80.0f64, x in 0.0..200.0f64) {
        let s = reg_gamma_p(a, x).unwrap() + reg_gamma_q(a, x).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gamma_inverse_round_trip(a in 0.1..80.0f64, p in 1e-9..0.999_999f64) {
        let x = inv_reg_gamma_p(a, p).unwrap();
        prop_assert!((reg_gamma_p(a, x).unwrap() - p).abs() <= 1e-12 * p.max(1e-3));
    }

    #[test]
    fn beta_reflection(x in 0.0..1.0f64, a in 0.2..40.0f64, b in 0.2..40.0f64) {
        let lhs = reg_beta_i(x, a, b).unwrap();
        let rhs = 1.0 - reg_beta_i(1.0 - x, b, a).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn caps_complement(m in 1usize..20, t in -1.0..1.0f64) {
        let s = cap_measure(m, t).unwrap() + cap_measure(m, -t).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn wce_is_permutation_invariant((mu, a, b) in kernel(), pts in cloud(3), shift in 0usize..12) {
        let p = KernelParams::new(mu, a, b, 2).unwrap();
        let x = to_points(&pts);
        let mut y = x.clone();
        y.rotate_left(shift % x.len());
        let (r1, r2) = (wce_nakagami(&p, &x).unwrap(), wce_nakagami(&p, &y).unwrap());
        prop_assert!(r1.wce_sq() >= 0.0);
        prop_assert!((r1.wce - r2.wce).abs() < 1e-12);
    }

    #[test]
    fn wce_is_rotation_invariant((mu, a, b) in kernel(), pts in cloud(3), axis in proptest::collection::vec(-1.0..1.0f64, 3)) {
        let norm: f64 = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let h: Vec<f64> = axis.iter().map(|v| v / norm).collect();
        // Householder reflection I − 2hhᵀ
        let reflect = |x: &Vec<f64>| -> Vec<f64> {
            let dot: f64 = x.iter().zip(&h).map(|(a, b)| a * b).sum();
            x.iter().zip(&h).map(|(a, b)| a - 2.0 * dot * b).collect()
        };
        let p = KernelParams::new(mu, a, b, 2).unwrap();
        let x = to_points(&pts);
        let y = to_points(&pts.iter().map(reflect).collect::<Vec<_>>());
        prop_assert!((wce_nakagami(&p, &x).unwrap().wce - wce_nakagami(&p, &y).unwrap().wce).abs() < 1e-10);
    }

    #[test]
    fn general_model_agrees((mu, a, b) in kernel(), pts in cloud(2)) {
        let p = KernelParams::new(mu, a, b, 1).unwrap();
        let x = to_points(&pts);
        let closed = wce_nakagami(&p, &x).unwrap().wce_sq();
        let general = wce_isotropic_general(&NakagamiModel(p), 1, &x).unwrap().wce_sq();
        prop_assert!((closed - general).abs() < 1e-7, "{} vs {}", closed, general);
    }

    #[test]
    fn sobol_seek_matches_sequential(dim in 1usize..20, idx in 0u64..5000, seed in any::<u64>()) {
        let mut seq = SobolStream::scrambled(dim, seed, 0).unwrap();
        for _ in 0..idx {
            seq.next_point().unwrap();
        }
        let mut jumped = SobolStream::scrambled(dim, seed, 0).unwrap();
        jumped.seek(idx).unwrap();
        prop_assert_eq!(seq.next_point().unwrap(), jumped.next_point().unwrap());
    }

    #[test]
    fn scrambled_points_stay_stratified(m in 1u32..10, seed in any::<u64>(), rep in 0u64..4) {
        let mut s = SobolStream::scrambled(3, seed, rep).unwrap();
        let n = 1usize << m;
        let mut seen = vec![[false; 3]; n];
        for _ in 0..n {
            let x = s.next_point().unwrap();
            for (j, v) in x.iter().enumerate() {
                let cell = (v * n as f64) as usize;
                prop_assert!(!seen[cell][j]);
                seen[cell][j] = true;
            }
        }
    }

    #[test]
    fn knock_out_never_pays_more(path in proptest::collection::vec(-1.0..1.0f64, 30)) {
        let asian = OptionSpec::benchmark(OptionKind::Asian);
        let barrier = OptionSpec::benchmark(OptionKind::Barrier);
        let digital = OptionSpec::benchmark(OptionKind::Digital);
        prop_assert!(barrier.payoff(&path) <= asian.payoff(&path));
        let d = digital.payoff(&path);
        prop_assert!(d == 0.0 || d == digital.discount());
    }

    #[test]
    fn csv_round_trip(rows in proptest::collection::vec(proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 1..20)) {
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        prop_assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }
}
