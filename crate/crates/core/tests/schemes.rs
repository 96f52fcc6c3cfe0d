use proptest::prelude::*;
use spde_taylor::model::{
    apply_diffusion, apply_semigroup, heat_additive_model, heat_multiplicative_model,
};
use spde_taylor::noise::NoisePath;
use spde_taylor::scheme::{compile, reference_snapshots, BuiltinScheme};
use spde_taylor::spectral::SpectralState;
use spde_taylor::term::TermExpr;

fn close(a: &SpectralState, b: &SpectralState, tol: f64) -> bool {
    a.sub(b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

#[test]
fn zero_noise_leaves_the_free_flow() {
    // heat-mult has no drift, so every scheme reduces to e^{Ah} u0
    let spec = heat_multiplicative_model(16, 16, 0.005).unwrap();
    let mut ws = spec.workspace();
    let h = 1.0 / 16.0;
    let path = NoisePath::zeros(64, 16, h / 64.0);
    let want = apply_semigroup(&spec.initial, h, &spec);
    for s in BuiltinScheme::ALL {
        let got = s.compile().step(&spec, &spec.initial, h, &path, 0, &mut ws).unwrap();
        assert!(close(&got.state, &want, 1e-13), "{}", s.name());
    }
    let r = reference_snapshots(&spec, &spec.initial, &path, 0, &[64], &mut ws).unwrap();
    assert!(close(&r[0], &want, 1e-13));
}

#[test]
fn single_substep_matches_the_reference() {
    let spec = heat_multiplicative_model(8, 8, 0.005).unwrap();
    let mut ws = spec.workspace();
    let path = NoisePath::for_path(3, 0, 1, 8, 1e-3);
    let r = reference_snapshots(&spec, &spec.initial, &path, 0, &[1], &mut ws).unwrap();
    let s = BuiltinScheme::ExpEuler.compile().step(&spec, &spec.initial, 1e-3, &path, 0, &mut ws).unwrap();
    assert!(close(&s.state, &r[0], 1e-14));
}

#[test]
fn reference_snapshots_restart_consistently() {
    let spec = heat_multiplicative_model(16, 16, 0.005).unwrap();
    let mut ws = spec.workspace();
    let path = NoisePath::for_path(11, 2, 40, 16, 1.0 / 1024.0);
    let both = reference_snapshots(&spec, &spec.initial, &path, 0, &[15, 40], &mut ws).unwrap();
    let rest = reference_snapshots(&spec, &both[0], &path, 15, &[25], &mut ws).unwrap();
    assert_eq!(both[1], rest[0]);
}

#[test]
fn reference_refines_towards_itself() {
    // Halving the mesh on a shared Brownian path moves the reference by less
    // each time: ||X_{h} - X_{h/2}|| shrinks with h.
    let spec = heat_multiplicative_model(16, 16, 0.005).unwrap();
    let mut ws = spec.workspace();
    let fine = 1 << 10;
    let t = 0.25;
    let mut gaps = Vec::new();
    let mut sum_sq = [0.0; 3];
    for idx in 0..20 {
        let p0 = NoisePath::for_path(5, idx, fine, 16, t / fine as f64);
        let mut paths = vec![p0];
        for _ in 0..3 {
            let prev = paths.last().unwrap();
            let m = prev.noise_modes();
            let coarse: Vec<f64> = (0..prev.substeps() / 2)
                .flat_map(|j| (0..m).map(move |k| (j, k)))
                .map(|(j, k)| prev.increment(2 * j)[k] + prev.increment(2 * j + 1)[k])
                .collect();
            paths.push(NoisePath::from_increments(coarse, m, prev.h_fine() * 2.0));
        }
        let ends: Vec<SpectralState> = paths
            .iter()
            .map(|p| {
                reference_snapshots(&spec, &spec.initial, p, 0, &[p.substeps()], &mut ws).unwrap().remove(0)
            })
            .collect();
        for l in 0..3 {
            sum_sq[l] += ends[l].sub(&ends[l + 1]).norm_sq();
        }
    }
    for s in sum_sq {
        gaps.push(s.sqrt());
    }
    assert!(gaps[0] < gaps[1] && gaps[1] < gaps[2], "{gaps:?}");
}

#[test]
fn discrete_convolution_is_exact() {
    // I^0_2 for the additive model is sum_j e^{-lambda h_f (n - j + 1)} b dW_j,
    // so its per-mode variance is b^2 h_f sum_{m=1..n} e^{-2 lambda h_f m}.
    let spec = heat_additive_model(6, 6).unwrap();
    let mut ws = spec.workspace();
    let scheme = compile(&"I^0_2".parse::<TermExpr>().unwrap()).unwrap();
    let (n, hf) = (32usize, 1.0 / 512.0);
    for k in 1..=6 {
        let mut var = 0.0;
        for j in 0..n {
            let mut inc = vec![0.0; n * 6];
            inc[j * 6 + k - 1] = 1.0;
            let path = NoisePath::from_increments(inc, 6, hf);
            let out = scheme.step(&spec, &spec.initial, n as f64 * hf, &path, 0, &mut ws).unwrap();
            let d = out.state.sub(&spec.initial);
            for (i, x) in d.coeffs().iter().enumerate() {
                if i + 1 != k {
                    assert_eq!(*x, 0.0);
                }
            }
            var += hf * d.coeffs()[k - 1].powi(2);
        }
        let (l, b) = (spec.eigenvalues[k - 1], 1.0 / k as f64);
        let exact: f64 = b * b * hf * (1..=n).map(|m| (-2.0 * l * hf * m as f64).exp()).sum::<f64>();
        assert!((var - exact).abs() <= 1e-13 * exact, "mode {k}: {var} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn additive_noise_terms_superpose(s1 in any::<u64>(), s2 in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let spec = heat_additive_model(8, 8).unwrap();
        let scheme = compile(&"I^0_2".parse::<TermExpr>().unwrap()).unwrap();
        let p = NoisePath::for_path(s1, 0, 16, 8, 1.0 / 256.0);
        let q = NoisePath::for_path(s2, 1, 16, 8, 1.0 / 256.0);
        let mut ws = spec.workspace();
        let mut go = |path: &NoisePath| {
            scheme.step(&spec, &spec.initial, 1.0 / 16.0, path, 0, &mut ws).unwrap().state.sub(&spec.initial)
        };
        let mut lin = go(&p);
        lin.scale(a);
        lin.axpy(b, &go(&q));
        let direct = go(&p.combine(a, &q, b));
        prop_assert!(close(&direct, &lin, 1e-13));
    }

    #[test]
    fn multiplication_noise_matrix_is_symmetric(c in proptest::collection::vec(-1.0f64..1.0, 12), k in 1usize..=12, m in 1usize..=12) {
        let spec = heat_multiplicative_model(12, 12, 0.005).unwrap();
        let mut ws = spec.workspace();
        let v = SpectralState::from_coeffs(c);
        let bk = apply_diffusion(&spec, &v, &[], k, &mut ws).unwrap();
        let bm = apply_diffusion(&spec, &v, &[], m, &mut ws).unwrap();
        prop_assert!((bk.coeffs()[m - 1] - bm.coeffs()[k - 1]).abs() < 1e-12);
    }

    #[test]
    fn steps_are_deterministic(seed in any::<u64>(), idx in 0u64..100) {
        let spec = heat_multiplicative_model(8, 8, 0.005).unwrap();
        let p = NoisePath::for_path(seed, idx, 8, 8, 1.0 / 128.0);
        for s in BuiltinScheme::ALL {
            let a = s.compile().step(&spec, &spec.initial, 1.0 / 16.0, &p, 0, &mut spec.workspace()).unwrap();
            let b = s.compile().step(&spec, &spec.initial, 1.0 / 16.0, &p, 0, &mut spec.workspace()).unwrap();
            prop_assert_eq!(a.state, b.state);
        }
    }
}
