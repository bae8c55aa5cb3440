//! Property tests for the structural invariants: normalization
//! homogeneity, spectral identities, determinant closed forms,
//! admissibility monotonicity, and field quasi-periodicity.

use floquet_bilayer::{
    linalg, normalize_params, validate_config, Assembler, DimensionlessParams, FloquetSolution,
    InterfaceEq, PhysicalParams, SolveOptions,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = DimensionlessParams> {
    (
        0.5f64..2.0,
        0.1f64..1.0,
        1.0f64..4.0,
        0.0f64..2.0,
        0.1f64..0.5,
        0.1f64..0.5,
        0.5f64..2.0,
    )
        .prop_map(
            |(omega, j1, quasi_energy, u0, alpha_kx, beta_ky, b)| DimensionlessParams {
                omega,
                j1,
                eps_xy: 0.0,
                quasi_energy,
                u0,
                alpha_kx,
                beta_ky,
                b,
                m_base: 0,
                n_len: 1,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_is_homogeneous(
        j0 in 0.5f64..4.0,
        j1 in 0.1f64..2.0,
        omega in 0.1f64..3.0,
        u0 in 0.0f64..2.0,
        quasi in 0.5f64..4.0,
        lambda in 0.25f64..4.0,
    ) {
        let base = PhysicalParams {
            hbar: 1.0, mass: 1.0, j0, j1, omega, u0,
            eps_xy: 0.1, alpha_kx: 0.2, beta_ky: 0.3, b: 1.0, quasi_energy: quasi,
        };
        // scale every energy (and the length, to compensate the unit) by
        // the same factor
        let scaled = PhysicalParams {
            j0: j0 * lambda,
            j1: j1 * lambda,
            omega: omega * lambda,
            u0: u0 * lambda,
            eps_xy: base.eps_xy * lambda,
            alpha_kx: base.alpha_kx * lambda,
            beta_ky: base.beta_ky * lambda,
            quasi_energy: quasi * lambda,
            b: base.b / lambda.sqrt(),
            ..base
        };
        let a = normalize_params(&base, 0, 1).unwrap();
        let c = normalize_params(&scaled, 0, 1).unwrap();
        for (x, y) in [
            (a.omega, c.omega), (a.j1, c.j1), (a.eps_xy, c.eps_xy),
            (a.quasi_energy, c.quasi_energy), (a.u0, c.u0),
            (a.alpha_kx, c.alpha_kx), (a.beta_ky, c.beta_ky), (a.b, c.b),
        ] {
            prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }

    #[test]
    fn spectral_ratio_products(p in params_strategy()) {
        let eig = floquet_bilayer::dispersion::spectral_constants(&p).unwrap();
        prop_assert!((eig.k_plus * eig.k_minus + 1.0).abs() < 1e-12);
        prop_assert!((eig.l_plus * eig.l_minus - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn admissibility_monotone_in_quasi_energy(p in params_strategy(), bump in 0.1f64..3.0) {
        let r = validate_config(&p).unwrap();
        if r.accept {
            let mut bigger = p;
            bigger.quasi_energy += bump;
            prop_assert!(validate_config(&bigger).unwrap().accept);
        }
        // longer solutions never turn a rejection into an acceptance
        let mut shorter = p;
        shorter.n_len = 1;
        let mut longer = p;
        longer.n_len = 2;
        let short_ok = validate_config(&shorter).unwrap().accept;
        if !short_ok {
            prop_assert!(!validate_config(&longer).unwrap().accept);
        }
    }

    #[test]
    fn determinant_closed_form_matches_cofactor(p in params_strategy()) {
        let r = validate_config(&p).unwrap();
        prop_assume!(r.accept && !r.marginal);
        let asm = Assembler::new(p, SolveOptions::default()).unwrap();
        let m = asm.interface_rhs_matrix(1);
        let brute = linalg::det_cofactor(&m);
        let closed = asm.interface_det(1, InterfaceEq::ValueSide);
        prop_assert!((brute - closed).norm() <= 1e-10 * brute.norm().max(1.0));
    }

    #[test]
    fn quasi_periodicity_of_fields(
        p in params_strategy(),
        z in -1.5f64..0.0,
        t in 0.0f64..6.0,
        re in -1.0f64..1.0,
        im in -1.0f64..1.0,
    ) {
        let r = validate_config(&p).unwrap();
        prop_assume!(r.accept && !r.marginal);
        let asm = Assembler::new(p, SolveOptions::default()).unwrap();
        prop_assume!(!asm.is_degenerate(1));
        let sol = FloquetSolution::construct(
            p,
            &[C64::new(re, im), C64::new(im, -re)],
            SolveOptions::default(),
        )
        .unwrap();
        let period = 4.0 * std::f64::consts::PI / p.omega;
        let phase = C64::new(0.0, -p.quasi_energy * period).exp();
        let a = sol.eval_left(z, t).unwrap();
        let b = sol.eval_left(z, t + period).unwrap();
        let scale = sol.scale().max(1.0);
        prop_assert!((b.up - phase * a.up).norm() < 1e-11 * scale);
        prop_assert!((b.down - phase * a.down).norm() < 1e-11 * scale);
    }

    #[test]
    fn same_parity_solutions_superpose_into_longer_ones(p in params_strategy()) {
        // two length-1 solutions whose base indices differ by 2 share one
        // c block; their sum is a valid length-2 solution of the lower
        // base index
        let mut low = p;
        low.m_base = -2;
        low.quasi_energy = p.quasi_energy.max(2.0);
        let mut high = low;
        high.m_base = 0;
        let mut union = low;
        union.n_len = 2;
        let ok = validate_config(&low).map(|r| r.accept && !r.marginal).unwrap_or(false)
            && validate_config(&high).map(|r| r.accept && !r.marginal).unwrap_or(false)
            && validate_config(&union).map(|r| r.accept && !r.marginal).unwrap_or(false);
        prop_assume!(ok);
        let asm_low = Assembler::new(low, SolveOptions::default()).unwrap();
        let asm_high = Assembler::new(high, SolveOptions::default()).unwrap();
        prop_assume!(!asm_low.is_degenerate(-1) && !asm_high.is_degenerate(1));
        let ta = asm_low.construct(&[C64::new(1.0, 0.2), C64::new(-0.3, 0.4)]).unwrap();
        let tb = asm_high.construct(&[C64::new(0.5, -0.7), C64::new(0.9, 0.1)]).unwrap();

        // index sets are disjoint except the shared middle c block
        prop_assert!(ta.g.keys().all(|k| !tb.g.contains_key(k)));

        let mut combined = floquet_bilayer::CoefficientTable::zeros(&union);
        for (k, blk) in ta.c.iter().chain(tb.c.iter()) {
            let slot = combined.c.get_mut(k).unwrap();
            for (s, v) in slot.iter_mut().zip(blk) {
                *s += v;
            }
        }
        for (k, blk) in ta.g.iter().chain(tb.g.iter()) {
            let slot = combined.g.get_mut(k).unwrap();
            for (s, v) in slot.iter_mut().zip(blk) {
                *s += v;
            }
        }
        let sol = FloquetSolution::from_table(union, combined).unwrap();
        let report = floquet_bilayer::matching_report(
            &sol,
            32,
            &floquet_bilayer::Tolerances::default(),
        )
        .unwrap();
        prop_assert!(report.all_pass(), "{report:?}");
        prop_assert!(floquet_bilayer::residual_algebraic(&sol) <= 1e-12);
    }

    #[test]
    fn constructed_tables_satisfy_every_constraint(p in params_strategy()) {
        let r = validate_config(&p).unwrap();
        prop_assume!(r.accept && !r.marginal);
        let asm = Assembler::new(p, SolveOptions::default()).unwrap();
        prop_assume!(!asm.is_degenerate(1));
        let table = asm.construct(&[C64::new(0.8, 0.1), C64::new(-0.2, 0.5)]).unwrap();
        let sys = asm.constraint_system();
        let residual = sys
            .mat
            .mul_vec(&table.to_vector())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        prop_assert!(residual < 1e-10 * table.scale().max(1.0));
    }
}

#[test]
fn fd_order_holds_across_parameter_draws() {
    use rand::{Rng, SeedableRng};
    let seed = std::env::var("FLOQUET_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0x0F10C4E7u64);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xFD);
    let mut checked = 0;
    while checked < 5 {
        let p = DimensionlessParams {
            omega: rng.gen_range(0.5..2.0),
            j1: rng.gen_range(0.1..1.0),
            eps_xy: 0.0,
            quasi_energy: rng.gen_range(1.5..4.0),
            u0: rng.gen_range(0.0..2.0),
            alpha_kx: rng.gen_range(0.1..0.5),
            beta_ky: rng.gen_range(0.1..0.5),
            b: rng.gen_range(0.5..2.0),
            m_base: 0,
            n_len: 1,
        };
        let Ok(report) = validate_config(&p) else {
            continue;
        };
        if !report.accept || report.marginal {
            continue;
        }
        let Ok(asm) = Assembler::new(p, SolveOptions::default()) else {
            continue;
        };
        if asm.is_degenerate(1) {
            continue;
        }
        let free = [
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        ];
        let sol = FloquetSolution::construct(p, &free, SolveOptions::default()).unwrap();
        let r = floquet_bilayer::residual_fd(
            &sol,
            &floquet_bilayer::FdGrid::default(),
            &floquet_bilayer::Tolerances::default(),
        )
        .unwrap();
        let order = r.convergence_order.unwrap();
        assert!(
            (1.8..=2.2).contains(&order) && r.fd_monotone == Some(true),
            "order {order} at {p:?}"
        );
        checked += 1;
    }
}
