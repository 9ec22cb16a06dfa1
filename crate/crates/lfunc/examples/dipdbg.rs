use lfunc::families::dirichlet::chi;
use lfunc::families::{EulerProduct, FamilyMember};
use lfunc::arith::{LocalFactor, SeriesMode};
use lfunc::kernel::{GammaFactor, KernelCtx, phi_partial};
use std::sync::Arc;

fn main() {
    let d = -43i64;
    let gf = GammaFactor::new(vec![0.0, 1.0]).unwrap();
    let mut ctx = KernelCtx::new(gf.clone()).unwrap();
    let hi = ctx.cutoff();
    println!("cutoff {hi}");
    ctx.prepare_range(3e-3, hi).unwrap();
    let provider = Arc::new(EulerProduct::new(move |p| Some(LocalFactor::linear(p, chi(d, p) as f64))));
    let member = FamilyMember::new("b", 43, gf, provider);
    let series = member.series(10_000, SeriesMode::Full).unwrap();
    // coefficient sanity
    for n in 1..=10u64 { print!("{} ", series.get(n as usize)); }
    println!("<- lambda(1..10) vs chi: {:?}", (1..=10u64).map(|n| chi(d, n)).collect::<Vec<_>>());
    for &y in &[0.035, 0.04, 0.0448, 0.05, 0.055] {
        let p = phi_partial(&series, &ctx, y).unwrap();
        let exact = 2.0 * std::f64::consts::PI.sqrt() * {
            let x = (-2.0 * std::f64::consts::PI * y).exp();
            let mut acc = 0.0; let mut xn = 1.0;
            for n in 1..100_000u64 { xn *= x; if xn < 1e-300 { break; } acc += chi(d, n) as f64 * xn; }
            acc
        };
        println!("y={y}: phi={:+.6e} tail={:.2e} budget={:.2e} certified={:?} exact={exact:+.6e}",
            p.value, p.tail_bound, p.quad_budget, p.certified_sign());
    }
}
