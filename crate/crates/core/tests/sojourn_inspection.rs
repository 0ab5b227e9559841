mod common;

use common::*;
use num_complex::Complex64;
use sojourn::linalg::{max_abs_row, to_complex, RowVector};
use sojourn::matrix_gf::transform_context;
use sojourn::sojourn_continuous::sojourn_lt_continuous;
use sojourn::sojourn_inspection::{
    mean_sojourn_inspection, phi_matrix, psi_vec_grid, psi_vec_grid_with, sojourn_lt_inspection, u_matrices,
};
use sojourn::stationary::r_matrix;
use sojourn::QueueParams;

#[test]
fn closed_assembly_equals_truncated_definition() {
    for p in [example(2), example(0), QueueParams::erlang2(1.0, 1.0, 1.5, 0.5, 3)] {
        let k = p.threshold();
        let r = to_complex(&r_matrix(&p).unwrap());
        for s in [cx(1.0), Complex64::new(0.2, 0.8)] {
            let ctx = transform_context(&p, s).unwrap();
            let grid = psi_vec_grid_with(&ctx, k, k + 401).unwrap();
            let u = u_matrices(&r, &ctx, k).unwrap();
            for m in 0..=k {
                // sum_h psi(K+h+1, m) R^h, h <= 400
                let mut direct = RowVector::zeros(ctx.dim());
                let mut r_pow = sojourn::linalg::identity(ctx.dim());
                for h in 0..=400 {
                    direct += grid.get(k + h + 1, m) * &r_pow;
                    r_pow = &r_pow * &r;
                }
                let phi = phi_matrix(m, &grid, &u, &ctx).unwrap();
                assert!(max_abs_row(&(phi - direct)) < 1e-9, "{p:?} m={m} s={s}");
            }
        }
    }
}

#[test]
fn grid_matches_absorbing_chain() {
    let p = example(2);
    let s = cx(1.0);
    let grid = psi_vec_grid(&p, s).unwrap();
    let oracle = absorbing_oracle(&p, s, 2, 200);
    for n in 1..=2 {
        for i in 0..2 {
            assert!((grid.get(n, 0)[i] - oracle[n][i]).norm() < 1e-10);
        }
    }
}

#[test]
fn threshold_zero_against_oracle() {
    let p = example(0);
    for s in [cx(0.5), Complex64::new(1.0, -2.0)] {
        let got = sojourn_lt_inspection(&p, s).unwrap();
        assert!((got - transform_oracle(&p, s, 600)).norm() < 1e-9);
    }
}

#[test]
fn golden_transform_values() {
    let p = example(2);
    for s in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let got = sojourn_lt_inspection(&p, cx(s)).unwrap();
        assert!((got - cx(psi_partial_fractions(s))).norm() < 1e-12, "s={s}");
    }
}

#[test]
fn real_axis_shape() {
    let p = example(3);
    let mut prev = 1.0;
    for i in 1..60 {
        let v = sojourn_lt_inspection(&p, cx(i as f64 * 0.1)).unwrap();
        assert!(v.im.abs() < 1e-14 && v.re > 0.0 && v.re < prev);
        prev = v.re;
    }
}

#[test]
fn fast_inspection_approaches_continuous() {
    for k in [1, 3] {
        let cont = QueueParams::continuous(1.0, 1.0, 1.5, k);
        for s in [0.5, 1.0, 2.0] {
            let want = sojourn_lt_continuous(&cont, cx(s)).unwrap();
            let gaps: Vec<f64> = [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]
                .iter()
                .map(|&g| (sojourn_lt_inspection(&QueueParams::exponential(1.0, 1.0, 1.5, g, k), cx(s)).unwrap() - want).norm())
                .collect();
            assert!(gaps[3..].windows(2).all(|w| w[1] < w[0]), "K={k} s={s}: {gaps:?}");
            assert!(gaps[5] < 1e-2);
        }
    }
}

#[test]
fn large_gamma_mean_near_continuous() {
    let insp = mean_sojourn_inspection(&QueueParams::exponential(1.0, 1.0, 1.5, 1e4, 1)).unwrap();
    let cont = sojourn::sojourn_continuous::mean_sojourn_continuous(&QueueParams::continuous(1.0, 1.0, 1.5, 1)).unwrap();
    assert!((insp - cont).abs() < 1e-2);
}

#[test]
fn erlang_and_exponential_inspection_same_mean_interval() {
    // Erlang(2, 2 gamma) and exponential(gamma) share the mean inspection interval
    let g = 1.0 / 8.0;
    let exp = mean_sojourn_inspection(&example(2)).unwrap();
    let erl = mean_sojourn_inspection(&QueueParams::erlang2(9.0 / 8.0, 1.0, 1.5, 2.0 * g, 2)).unwrap();
    println!("mean sojourn: exponential {exp:.6}, erlang-2 {erl:.6}");
    assert!(((erl - exp) / exp).abs() < 0.2);
    assert!((erl - exp).abs() > 1e-6);
}

#[test]
fn erlang2_against_four_phase_oracle() {
    let p = QueueParams::erlang2(9.0 / 8.0, 1.0, 1.5, 0.25, 2);
    for s in [cx(0.1), cx(2.0), Complex64::new(0.6, 3.0)] {
        let got = sojourn_lt_inspection(&p, s).unwrap();
        assert!((got - transform_oracle(&p, s, 800)).norm() < 1e-9);
    }
}
