use tmatch_core::grid::{self, GridField, Scheme};
use tmatch_core::qpoisson::*;
use std::f64::consts::TAU;

// standalone reimplementation of one Newton stage with prints
fn main() {
    let n = 64usize;
    let q = 3.0;
    let amplitude = 0.1;
    let flux = GridField::from_fn(n, |x1, _| signed_power(amplitude * TAU * (TAU * x1).cos(), q)).unwrap();
    let (d1, _) = grid::gradient(&flux, Scheme::Spectral);
    let rhs = d1.scale(-1.0);

    let eps = 1e-2f64;
    // warm start
    let prob = QPoissonProblem::from_q(rhs.clone(), q).unwrap();
    let phi0 = solve_q2(&rhs).unwrap();
    let mut phi = phi0.phi().clone();
    for it in 0..10 {
        let (val, g) = dbg_value_grad(&phi, &rhs, q, eps);
        let dir = dbg_newton_dir(&phi, &rhs, q, eps);
        let slope = grid::inner_product(&g, &dir).unwrap();
        println!("it {it}: val {val:.10e} |G| {:.3e} slope {:.3e} |dir| {:.3e}", g.l2_norm(), slope, dir.l2_norm());
        // try step 1
        let mut step = 1.0;
        let mut taken = false;
        for _ in 0..40 {
            let cand = phi.add_scaled(&dir, step).unwrap().project_mean_zero();
            let cv = dbg_value(&cand, &rhs, q, eps);
            if cv <= val + 1e-4 * step * slope {
                println!("   accepted step {step:.3e}: val {cv:.10e} (decrease {:.3e})", val - cv);
                phi = cand;
                taken = true;
                break;
            }
            step *= 0.5;
        }
        if !taken { println!("   line search failed"); break; }
    }
    let _ = prob;
}

fn dbg_value(f: &GridField, rhs: &GridField, q: f64, eps: f64) -> f64 {
    let (g1, g2) = grid::gradient(f, Scheme::Spectral);
    let nn = (f.resolution() * f.resolution()) as f64;
    let mut s_sum = 0.0;
    for (a, b) in g1.values().iter().zip(g2.values()) {
        s_sum += (a * a + b * b + eps * eps).powf(0.5 * q);
    }
    s_sum / (nn * q) - grid::inner_product(f, rhs).unwrap()
}

fn dbg_value_grad(f: &GridField, rhs: &GridField, q: f64, eps: f64) -> (f64, GridField) {
    let n = f.resolution();
    let (g1, g2) = grid::gradient(f, Scheme::Spectral);
    let mut f1 = vec![0.0; n * n];
    let mut f2 = vec![0.0; n * n];
    for i in 0..n * n {
        let a = g1.values()[i];
        let b = g2.values()[i];
        let w = (a * a + b * b + eps * eps).powf(0.5 * (q - 2.0));
        f1[i] = w * a;
        f2[i] = w * b;
    }
    let div = grid::divergence(&GridField::from_values(n, f1).unwrap(), &GridField::from_values(n, f2).unwrap()).unwrap();
    let g = div.add_scaled(rhs, 1.0).unwrap().scale(-1.0);
    (dbg_value(f, rhs, q, eps), g)
}

fn dbg_newton_dir(phi: &GridField, rhs: &GridField, q: f64, eps: f64) -> GridField {
    let n = phi.resolution();
    let (_, g) = dbg_value_grad(phi, rhs, q, eps);
    let b = g.scale(-1.0);
    // CG on H s = b with M = (-lap)/mean_w
    let (g1, g2) = grid::gradient(phi, Scheme::Spectral);
    let mut weight = vec![0.0; n * n];
    let mut rank_one = vec![0.0; n * n];
    for i in 0..n * n {
        let a = g1.values()[i];
        let bb = g2.values()[i];
        let s = a * a + bb * bb + eps * eps;
        weight[i] = s.powf(0.5 * (q - 2.0));
        rank_one[i] = (q - 2.0) * s.powf(0.5 * (q - 4.0));
    }
    let mean_w: f64 = weight.iter().sum::<f64>() / (n * n) as f64;
    let hess = |d: &GridField| -> GridField {
        let (d1, d2) = grid::gradient(d, Scheme::Spectral);
        let mut a1 = vec![0.0; n * n];
        let mut a2 = vec![0.0; n * n];
        for i in 0..n * n {
            let gdot = g1.values()[i] * d1.values()[i] + g2.values()[i] * d2.values()[i];
            let c = rank_one[i] * gdot;
            a1[i] = weight[i] * d1.values()[i] + c * g1.values()[i];
            a2[i] = weight[i] * d2.values()[i] + c * g2.values()[i];
        }
        grid::divergence(&GridField::from_values(n, a1).unwrap(), &GridField::from_values(n, a2).unwrap()).unwrap().scale(-1.0)
    };
    let precond = |r: &GridField| -> GridField {
        let s = solve_q2(&r.project_mean_zero()).unwrap();
        s.phi().scale(1.0 / mean_w)
    };
    let mut s = GridField::zeros(n).unwrap();
    let mut r = b.clone();
    let bn = b.l2_norm();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = grid::inner_product(&r, &z).unwrap();
    for cg in 0..256 {
        let hp = hess(&p);
        let php = grid::inner_product(&p, &hp).unwrap();
        if php <= 0.0 { println!("   cg {cg}: php {php:.3e} <= 0 !!"); break; }
        let alpha = rz / php;
        s = s.add_scaled(&p, alpha).unwrap();
        r = r.add_scaled(&hp, -alpha).unwrap();
        let rn = r.l2_norm();
        if cg % 32 == 0 || rn <= 1e-10 * bn { println!("   cg {cg}: |r|/|b| {:.3e}", rn / bn); }
        if rn <= 1e-10 * bn { break; }
        z = precond(&r);
        let rz2 = grid::inner_product(&r, &z).unwrap();
        let beta = rz2 / rz;
        rz = rz2;
        p = z.add_scaled(&p, beta).unwrap();
    }
    s.project_mean_zero()
}
