//! Randomized invariants of operators, kernels and norms.

use fraclab_core::fracops::{apply_pipeline, build_named_operator};
use fraclab_core::kernelspace::{kernel_besov_norm, kernel_dhalf};
use fraclab_core::lattice::{integrate, sample_trial};
use fraclab_core::multicomm::apply_tk;
use fraclab_core::normbank::{besov_difference, dyadic_besov, lorentz_norm, lp_norm, sobolev_spectral};
use fraclab_core::{make_grid, EnsembleSpec, KernelNormParams, MatrixField, VectorField};
use proptest::prelude::*;

fn pair(seed: u64) -> (MatrixField, VectorField, VectorField) {
    let g = make_grid(8.0, 64).unwrap();
    let spec = EnsembleSpec::new(seed, 2, 2);
    let (q, u) = sample_trial(&spec, &g, 0);
    let (_, v) = sample_trial(&spec, &g, 1);
    (q, u, v)
}

fn combo(a: f64, u: &VectorField, b: f64, v: &VectorField) -> VectorField {
    let mut w = u.scaled(a);
    w.axpy(b, v);
    w
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300)
}

fn norms(f: &VectorField) -> Vec<f64> {
    vec![
        lp_norm(f, 2.0),
        lp_norm(f, 3.0),
        sobolev_spectral(f, 0.5).unwrap().value,
        sobolev_spectral(f, -0.5).unwrap().value,
        besov_difference(f, 0.5, 2.0, 2.0).unwrap().value,
        besov_difference(f, 0.25, 4.0, 1.0).unwrap().value,
        dyadic_besov(f, -0.25, 2.0, 2.0).unwrap().value,
        dyadic_besov(f, 0.5, 3.0, 1.0).unwrap().value,
        lorentz_norm(f, 2.0, 1.0).unwrap().value,
        lorentz_norm(f, 3.0, 2.0).unwrap().value,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pipelines_are_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (q, u, v) = pair(seed);
        for name in ["T3", "RQ", "opL", "CRW", "dhalfQ"] {
            let p = build_named_operator(name, &q, None).unwrap();
            let lhs = apply_pipeline(&p, &combo(a, &u, b, &v)).unwrap();
            let (pu, pv) = (apply_pipeline(&p, &u).unwrap(), apply_pipeline(&p, &v).unwrap());
            let err = lhs.sub(&combo(a, &pu, b, &pv)).l2();
            prop_assert!(err <= 1e-10 * (a.abs() * pu.l2() + b.abs() * pv.l2()), "{name}: {err}");
        }
    }

    #[test]
    fn rq_minus_lq_is_anti_self_dual(seed in 0u64..1000) {
        let (q, w, v) = pair(seed);
        let r = build_named_operator("RQ", &q, None).unwrap();
        let l = build_named_operator("LQ", &q, None).unwrap();
        let op = |f: &VectorField| apply_pipeline(&r, f).unwrap().sub(&apply_pipeline(&l, f).unwrap());
        let (ow, ov) = (op(&w), op(&v));
        let scale = w.l2() * ov.l2() + ow.l2() * v.l2();
        prop_assert!((w.dot(&ov) + ow.dot(&v)).abs() <= 1e-8 * scale);
    }

    #[test]
    fn tk_is_linear_in_v_and_k(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (q, u, v) = pair(seed);
        let k = kernel_dhalf(&q);
        let lhs = apply_tk(&k, &combo(a, &u, b, &v)).unwrap();
        let rhs = combo(a, &apply_tk(&k, &u).unwrap(), b, &apply_tk(&k, &v).unwrap());
        prop_assert!(lhs.sub(&rhs).l2() <= 1e-10 * lhs.l2().max(1.0));
        let scaled = apply_tk(&k.scaled(a), &u).unwrap();
        prop_assert!(scaled.sub(&apply_tk(&k, &u).unwrap().scaled(a)).l2() <= 1e-10 * scaled.l2().max(1.0));
    }

    #[test]
    fn tk_of_constant_integrates_to_zero(seed in 0u64..1000) {
        let (q, _, _) = pair(seed);
        let k = kernel_dhalf(&q);
        let c = VectorField::from_fn(&q.grid, 2, |_, o| { o[0] = 1.0; o[1] = -0.5; });
        let t = apply_tk(&k, &c).unwrap();
        for (x, scale) in integrate(&t).iter().zip([t.l2(); 2]) {
            prop_assert!(x.abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn kernel_norm_is_homogeneous(seed in 0u64..1000, a in -4.0f64..4.0) {
        let (q, _, _) = pair(seed);
        let k = kernel_dhalf(&q);
        let params = KernelNormParams::new(-0.25, 2.0, 2.0);
        let base = kernel_besov_norm(&k, params).unwrap().value;
        let sc = kernel_besov_norm(&k.scaled(a), params).unwrap().value;
        prop_assert!(close(sc, a.abs() * base, 1e-12));
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive(seed in 0u64..1000, a in -4.0f64..4.0) {
        let (_, u, v) = pair(seed);
        let nu = norms(&u);
        let nv = norms(&v);
        let ns = norms(&combo(1.0, &u, 1.0, &v));
        let na = norms(&u.scaled(a));
        for i in 0..nu.len() {
            prop_assert!(close(na[i], a.abs() * nu[i], 1e-10), "homogeneity {i}");
            prop_assert!(ns[i] <= nu[i] + nv[i] + 1e-10 * (nu[i] + nv[i]), "triangle {i}");
        }
        prop_assert!(norms(&u.scaled(0.0)).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn sobolev_duality_bound(seed in 0u64..1000) {
        let (_, u, v) = pair(seed);
        let (u, v) = (u.remove_mean(), v.remove_mean());
        let lhs = u.dot(&v).abs();
        let rhs = sobolev_spectral(&u, 0.5).unwrap().value * sobolev_spectral(&v, -0.5).unwrap().value;
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn lorentz_matches_lp_and_nests(seed in 0u64..1000, p in 1.5f64..6.0) {
        let (_, u, _) = pair(seed);
        prop_assert!(close(lorentz_norm(&u, p, p).unwrap().value, lp_norm(&u, p), 1e-10));
        // ‖f‖_{p,r₂} ≤ (r₁/p)^{1/r₁ − 1/r₂} ‖f‖_{p,r₁} for r₁ < r₂
        let rs = [1.0, 1.5, p, 2.0 * p, f64::INFINITY];
        let vals: Vec<f64> = rs.iter().map(|&r| lorentz_norm(&u, p, r).unwrap().value).collect();
        for i in 0..rs.len() {
            for j in i + 1..rs.len() {
                let c = (rs[i] / p).powf(1.0 / rs[i] - 1.0 / rs[j]);
                prop_assert!(vals[j] <= c * vals[i] * (1.0 + 1e-12), "r {} vs {}", rs[i], rs[j]);
            }
        }
        let (l21, l2, l2w) = (
            lorentz_norm(&u, 2.0, 1.0).unwrap().value,
            lp_norm(&u, 2.0),
            lorentz_norm(&u, 2.0, f64::INFINITY).unwrap().value,
        );
        prop_assert!(l21 >= l2 && l2 >= l2w);
    }
}
