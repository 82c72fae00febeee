//! End-to-end acceptance suite. Twelve numbered criteria, each with pinned
//! tolerances, printed as one pass/fail line with the measured values. The
//! test fails if any criterion fails; the printed lines are the record of
//! what was measured either way.
//!
//! Run with: cargo test --release --test acceptance -- --nocapture

use riesz_lattice::kernels::{
    build_table, j_l1_norm, k_continuous, k_prob, Combination, Family, KernelSpec, KernelTable,
};
use riesz_lattice::lattice::{
    classical_riesz_oracle, dilated_apply, SmoothKind, SmoothSampler,
};
use riesz_lattice::multiplier::{multiplier_eval, sup_norm};
use riesz_lattice::mc::u_monte_carlo;
use riesz_lattice::norms::lp_lower_bound_with_table;
use riesz_lattice::theta::{
    gaussian_heat, periodic_heat, q_function, theta, theta_dz, theta_series_fourier,
    theta_series_gaussian, Parity, SeriesTolerance, TimeParam, TorusCoordinate,
};
use riesz_lattice::ufunc::{u_value, u_value_direct, UCacheKey};

const EPS: f64 = 1e-8;
const RADIUS: i64 = 200;
const RESOLUTION: usize = 512;
const REFINE: usize = 3;
const BOX: i64 = 48;
const ASCENT_ITERS: usize = 60;
const SEED: u64 = 1;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn spec(family: Family, j: usize, k: usize, c: Combination) -> KernelSpec {
    KernelSpec::new(family, 2, j, k, c).expect("valid spec")
}

fn table(family: Family, j: usize, k: usize, c: Combination, r: i64) -> KernelTable {
    build_table(spec(family, j, k, c), r, EPS).expect("table build")
}

fn tc(x: f64) -> TorusCoordinate<f64> {
    TorusCoordinate::new(x)
}

fn tp(t: f64) -> TimeParam<f64> {
    TimeParam::new(t).expect("positive time")
}

/// Criterion 1: refined sup of the truncated off-diagonal multiplier,
/// expected 1/2 within 0.02.
fn c1() -> Outcome {
    let t = table(Family::Probabilistic, 1, 2, Combination::Single, RADIUS);
    let grid = multiplier_eval(&t, RESOLUTION).expect("grid");
    let sn = sup_norm(&grid, &t, REFINE);
    let pass = (sn.refined - 0.5).abs() <= 0.02;
    Outcome {
        id: 1,
        name: "off-diagonal multiplier sup = 1/2",
        pass,
        detail: format!(
            "refined sup {:.5} at xi = ({:.4}, {:.4}), target 0.5 +/- 0.02",
            sn.refined, sn.argmax[0], sn.argmax[1]
        ),
    }
}

/// Criterion 2: refined sup of the truncated diagonal multiplier, expected
/// <= 1.02. The truncated diagonal symbol grows like 0.75 ln R near xi = 0
/// because the diagonal kernel has nonvanishing angular mean, so finite
/// sections do not reproduce the bounded operator; see the ledger note in
/// criterion 7.
fn c2() -> Outcome {
    let t = table(Family::Probabilistic, 1, 1, Combination::Single, RADIUS);
    let grid = multiplier_eval(&t, RESOLUTION).expect("grid");
    let sn = sup_norm(&grid, &t, REFINE);
    let pass = sn.refined <= 1.02;
    Outcome {
        id: 2,
        name: "diagonal multiplier sup <= 1.02",
        pass,
        detail: format!(
            "refined sup {:.5} at xi = ({:.4}, {:.4}), cap 1.02",
            sn.refined, sn.argmax[0], sn.argmax[1]
        ),
    }
}

/// Criterion 3: quadrature, direct integral, and Monte Carlo evaluations of
/// U(m) agree (1e-5 for the deterministic pair, 3 stderr for Monte Carlo).
fn c3() -> Outcome {
    let points: [&[i64]; 5] = [&[1, 0], &[1, 1], &[2, 1], &[2, 2], &[3, 0]];
    let mut worst_det = 0.0f64;
    let mut worst_z = 0.0f64;
    let mut pass = true;
    for (i, m) in points.iter().enumerate() {
        let key = UCacheKey::from_point(m).expect("nonzero");
        let uq = u_value(key, 2, EPS).expect("u quadrature");
        let ud = u_value_direct(m, EPS).expect("u direct");
        let mc = u_monte_carlo(m, 1_000_000, SEED + i as u64).expect("mc");
        let det = (uq - ud).abs();
        let z = (mc.mean - uq).abs() / mc.stderr;
        worst_det = worst_det.max(det);
        worst_z = worst_z.max(z);
        if det > 1e-5 || z > 3.0 {
            pass = false;
        }
    }
    Outcome {
        id: 3,
        name: "three-way U agreement",
        pass,
        detail: format!(
            "max |quad - direct| {:.2e} (cap 1e-5), max MC z-score {:.2} (cap 3)",
            worst_det, worst_z
        ),
    }
}

/// Criterion 4: decay law |U(m)+1| <= C/|m|; no shell's max of |U+1| |m| may
/// exceed twice the |m| = 5 shell.
fn c4() -> Outcome {
    let shell = |r: i64| -> f64 {
        let mut best = 0.0f64;
        for m1 in 0..=r {
            let m2sq = r * r - m1 * m1;
            let m2 = (m2sq as f64).sqrt().round() as i64;
            if m2 * m2 != m2sq {
                continue;
            }
            let key = UCacheKey::from_point(&[m1, m2]).expect("nonzero");
            let u = u_value(key, 2, EPS).expect("u");
            best = best.max((u + 1.0).abs() * r as f64);
        }
        best
    };
    let base = shell(5);
    let rest: Vec<f64> = [10, 20, 40].iter().map(|&r| shell(r)).collect();
    let pass = rest.iter().all(|&v| v <= 2.0 * base);
    Outcome {
        id: 4,
        name: "corrector decay across shells",
        pass,
        detail: format!(
            "max |U+1||m|: shell 5 = {base:.2e}, shells 10/20/40 = {:.2e}/{:.2e}/{:.2e} (cap 2x)",
            rest[0], rest[1], rest[2]
        ),
    }
}

/// Criterion 5: the corrector's partial l^1 norms at R = 40 and R = 80
/// differ by less than the R = 40 tail bound, and the value is finite.
fn c5() -> Outcome {
    let (p40, t40) = j_l1_norm(1, 2, 2, 40, EPS).expect("j l1 r40");
    let (p80, _) = j_l1_norm(1, 2, 2, 80, EPS).expect("j l1 r80");
    let diff = (p80 - p40).abs();
    let pass = p40.is_finite() && p80.is_finite() && diff < t40;
    Outcome {
        id: 5,
        name: "corrector l^1 norm stabilizes",
        pass,
        detail: format!(
            "partial norm {p40:.8} (R = 40) vs {p80:.8} (R = 80), diff {diff:.2e} < tail {t40:.2e}"
        ),
    }
}

/// Criterion 6: ascent lower bounds for the doubled off-diagonal kernel and
/// the diagonal difference land in [0.85 (p*-1), 1.01 (p*-1)] at
/// p in {2, 3, 4}. Finite boxes approach p*-1 only through multiscale
/// (laminate-like) functions, with roughly +0.075 per doubling of the box at
/// p in {3, 4}; box 48 sits far below the 0.85 edge there, and the diagonal
/// difference at p = 2 locks onto a truncation resonance of the symbol at
/// the Brillouin corner (value about 1.27 > p*-1). Both shortfalls are
/// properties of finite sections, not of the ascent.
fn c6() -> Outcome {
    let specs = [
        ("2K12", Combination::Twice),
        ("diagdiff", Combination::DiagDiff),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, comb) in specs {
        let t = table(Family::Probabilistic, 1, 2, comb, RADIUS);
        for p in [2.0f64, 3.0, 4.0] {
            let pstar1 = p.max(p / (p - 1.0)) - 1.0;
            let (est, _) =
                lp_lower_bound_with_table(&t, p, BOX, ASCENT_ITERS, SEED).expect("ascent");
            let lo = 0.85 * pstar1;
            let hi = 1.01 * pstar1;
            let ok = est.value >= lo && est.value <= hi;
            if !ok {
                pass = false;
            }
            parts.push(format!(
                "{label} p={p}: {:.4} {} [{lo:.3}, {hi:.3}]",
                est.value,
                if ok { "in" } else { "NOT in" }
            ));
        }
    }
    Outcome {
        id: 6,
        name: "norm sandwich at p in {2,3,4}",
        pass,
        detail: parts.join("; "),
    }
}

/// Criterion 7: ascent lower bound for the diagonal kernel at p = 2 stays
/// <= 1.01. The truncated diagonal operator is log-divergent (criterion 2),
/// so the finite-section value exceeds the bound of the renormalized
/// operator by design of the truncation, not by an ascent defect.
fn c7() -> Outcome {
    let t = table(Family::Probabilistic, 1, 1, Combination::Single, RADIUS);
    let (est, _) = lp_lower_bound_with_table(&t, 2.0, BOX, ASCENT_ITERS, SEED).expect("ascent");
    let pass = est.value <= 1.01;
    Outcome {
        id: 7,
        name: "diagonal kernel at p = 2 <= 1.01",
        pass,
        detail: format!("lower bound {:.4}, cap 1.01", est.value),
    }
}

/// Criterion 8: complex (Beurling-Ahlfors type) kernel; lower bound at
/// p = 2 in [0.85, 2.02] and at p = 4 at most 2 * 3 * 1.01.
fn c8() -> Outcome {
    let t = table(Family::BaProbabilistic, 1, 2, Combination::Single, 80);
    let (e2, _) = lp_lower_bound_with_table(&t, 2.0, 24, ASCENT_ITERS, SEED).expect("ascent");
    let (e4, _) = lp_lower_bound_with_table(&t, 4.0, 24, ASCENT_ITERS, SEED).expect("ascent");
    let pass = e2.value >= 0.85 && e2.value <= 2.02 && e4.value <= 6.06;
    Outcome {
        id: 8,
        name: "complex kernel norm window",
        pass,
        detail: format!(
            "p = 2: {:.4} in [0.85, 2.02]; p = 4: {:.4} <= 6.06",
            e2.value, e4.value
        ),
    }
}

/// Criterion 9: the dilated discrete operator applied to a Gaussian bump
/// converges to the continuous transform (the operator whose kernel is
/// k_continuous, i.e. minus the classical-sign convention) as eps -> 0;
/// errors must strictly decrease along eps = 1/4, 1/8, 1/16, 1/32 at three
/// sample points.
fn c9() -> Outcome {
    let f = SmoothSampler::new(2, SmoothKind::Gaussian { sigma: 0.4 }).expect("sampler");
    let sp = spec(Family::Probabilistic, 1, 2, Combination::Single);
    let xs = [[0.3, 0.1], [-0.2, 0.45], [0.5, -0.5]];
    let mut pass = true;
    let mut parts = Vec::new();
    for x in xs {
        let exact = -classical_riesz_oracle(1, 2, &f, &x).expect("oracle");
        let mut prev = f64::INFINITY;
        let mut errs = Vec::new();
        for &eps in &[0.25f64, 0.125, 0.0625, 0.03125] {
            // radius so that eps R covers the bump down to ~1e-20
            let r = ((0.4 * 9.7 + 1.6) / eps).ceil() as i64;
            let t = build_table(sp, r, EPS).expect("table");
            let v = dilated_apply(&t, &f, eps, &x).expect("dilated");
            let err = (v - exact).abs();
            if err >= prev {
                pass = false;
            }
            prev = err;
            errs.push(format!("{err:.1e}"));
        }
        parts.push(format!("x = ({}, {}): {}", x[0], x[1], errs.join(" > ")));
    }
    Outcome {
        id: 9,
        name: "dilation errors strictly decrease",
        pass,
        detail: parts.join("; "),
    }
}

/// Criterion 10: q_0, q_1 on [1/8, 1/2] (200 points) stay in (0, 1.5) and
/// both are within 0.1 of 1 at t = 1/2.
fn c10() -> Outcome {
    let tol = SeriesTolerance::default();
    let mut in_range = true;
    let mut q0_half = 0.0;
    let mut q1_half = 0.0;
    for i in 0..200 {
        let t = 0.125 + (0.5 - 0.125) * i as f64 / 199.0;
        let q0: f64 = q_function(Parity::Even, tp(t), &tol).expect("q0");
        let q1: f64 = q_function(Parity::Odd, tp(t), &tol).expect("q1");
        if !(q0 > 0.0 && q0 < 1.5 && q1 > 0.0 && q1 < 1.5) {
            in_range = false;
        }
        if i == 199 {
            q0_half = q0;
            q1_half = q1;
        }
    }
    let near_one = (q0_half - 1.0).abs() <= 0.1 && (q1_half - 1.0).abs() <= 0.1;
    Outcome {
        id: 10,
        name: "q-curve range",
        pass: in_range && near_one,
        detail: format!(
            "in (0, 1.5) on [1/8, 1/2]: {in_range}; q0(1/2) = {q0_half:.5}, q1(1/2) = {q1_half:.5}"
        ),
    }
}

/// Criterion 11: theta consistency suite (dual representations on a grid,
/// Gaussian lower bound, derivative vs finite differences, H_t -> 1).
fn c11() -> Outcome {
    let tol = SeriesTolerance::default();
    let mut dual_max = 0.0f64;
    for i in 0..20 {
        let x = -0.5 + 0.05 * i as f64;
        for k in 0..20 {
            let t = 0.02 * (5.0f64 / 0.02).powf(k as f64 / 19.0);
            let a: f64 = theta_series_fourier(tc(x), tp(t), &tol).expect("fourier");
            let b: f64 = theta_series_gaussian(tc(x), tp(t), &tol).expect("gaussian");
            dual_max = dual_max.max((a - b).abs());
        }
    }
    let dual_ok = dual_max <= 1e-10;

    let mut lower_ok = true;
    for &t in &[0.05, 0.3, 2.0] {
        for &x in &[[0.0, 0.0], [0.3, -0.2], [0.5, 0.5], [0.49, 0.01]] {
            let h = periodic_heat(&x, tp(t), &tol).expect("heat");
            let xq: Vec<f64> = x.iter().map(|&v| tc(v).get()).collect();
            if h < gaussian_heat(&xq, tp(t)) * (1.0 - 1e-12) {
                lower_ok = false;
            }
        }
    }

    let mut fd_ok = true;
    let h = 1e-6;
    for &t in &[0.05, 0.1, 0.5, 1.0, 5.0] {
        for &x in &[0.25, 0.1, -0.37, 0.49] {
            let d: f64 = theta_dz(tc(x), tp(t), &tol).expect("dz");
            let fp: f64 = theta(tc(x + h), tp(t), &tol).expect("theta");
            let fm: f64 = theta(tc(x - h), tp(t), &tol).expect("theta");
            let fd = (fp - fm) / (2.0 * h);
            if (d - fd).abs() > (1e-6f64).max(1e-4 * d.abs()) {
                fd_ok = false;
            }
        }
    }

    let sup = |t: f64| -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..21 {
            for j in 0..21 {
                let x = [-0.5 + i as f64 / 21.0, -0.5 + j as f64 / 21.0];
                let hv = periodic_heat(&x, tp(t), &tol).expect("heat");
                s = s.max((hv - 1.0).abs());
            }
        }
        s
    };
    let s100 = sup(100.0);
    let s10k = sup(1e4);
    let decay_ok = s100 <= 10.0 * s10k.max(1e-300) || s100 < 1e-200;

    Outcome {
        id: 11,
        name: "theta property suite",
        pass: dual_ok && lower_ok && fd_ok && decay_ok,
        detail: format!(
            "dual max {dual_max:.2e} (cap 1e-10); lower bound {lower_ok}; derivative FD {fd_ok}; decay {decay_ok}"
        ),
    }
}

/// Criterion 12: the continuous kernel matches the lattice kernel at lattice
/// points (1e-6) and |k_continuous(x)| |x|^2 stays below 0.25 over
/// 0.1 <= |x| <= 50.
fn c12() -> Outcome {
    let mut lattice_max = 0.0f64;
    for m1 in 0..=4i64 {
        for m2 in -4..=4i64 {
            let n2 = m1 * m1 + m2 * m2;
            if n2 == 0 || n2 > 16 {
                continue;
            }
            let kc = k_continuous(1, 2, &[m1 as f64, m2 as f64], EPS).expect("k cont");
            let kp = k_prob(1, 2, &[m1, m2], EPS).expect("k prob");
            lattice_max = lattice_max.max((kc - kp).abs());
        }
    }
    let mut scaled_max = 0.0f64;
    for i in 0..40 {
        let r = 0.1 * (500.0f64).powf(i as f64 / 39.0);
        for a in 0..8 {
            let th = std::f64::consts::PI * a as f64 / 8.0 + 0.13;
            let x = [r * th.cos(), r * th.sin()];
            let v = k_continuous(1, 2, &x, EPS).expect("k cont");
            scaled_max = scaled_max.max(v.abs() * r * r);
        }
    }
    let pass = lattice_max <= 1e-6 && scaled_max <= 0.25;
    Outcome {
        id: 12,
        name: "continuous/discrete kernel consistency",
        pass,
        detail: format!(
            "lattice mismatch {lattice_max:.2e} (cap 1e-6); max |k| |x|^2 = {scaled_max:.4} (cap 0.25)"
        ),
    }
}

#[test]
fn acceptance() {
    let outcomes = vec![
        c1(),
        c2(),
        c3(),
        c4(),
        c5(),
        c6(),
        c7(),
        c8(),
        c9(),
        c10(),
        c11(),
        c12(),
    ];
    let mut failed = Vec::new();
    for o in &outcomes {
        println!(
            "criterion {:2} [{}] {}: {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        if !o.pass {
            failed.push(o.id);
        }
    }
    assert!(
        failed.is_empty(),
        "failed criteria: {failed:?} (see the printed lines for measured values)"
    );
}
