use lfunc::families::dirichlet::{chi, enumerate_fundamental, fekete_zero_in_01};
use lfunc::families::{EulerProduct, FamilyMember};
use lfunc::arith::LocalFactor;
use lfunc::kernel::{GammaFactor, KernelCtx, kernel_w_direct};
use lfunc::posdef::{phi_sign_scan, ScanParams, VerdictStatus};
use std::sync::Arc;

fn main() {
    // Kernel check: shifts (0,1) gives W(y) = 2 sqrt(pi) e^{-2 pi y}.
    let gf = GammaFactor::new(vec![0.0, 1.0]).unwrap();
    for &y in &[0.05, 0.5, 2.0] {
        let (w, _) = kernel_w_direct(&gf, y).unwrap();
        let exact = 2.0 * std::f64::consts::PI.sqrt() * (-2.0 * std::f64::consts::PI * y).exp();
        println!("W({y}) = {w:.12e} vs {exact:.12e} rel {:.1e}", (w - exact).abs() / exact);
    }
    let mut ctx = KernelCtx::new(gf.clone()).unwrap();
    let hi = ctx.cutoff();
    ctx.prepare_range(3e-3, hi).unwrap();
    let params = ScanParams { y_lo: 4e-3, y_hi: 3.0, grid_count: 288, truncation: 10_000, refine_budget: 30 };
    let t0 = std::time::Instant::now();
    let mut mismatches = vec![];
    for &d in &enumerate_fundamental(201) {
        let sturm = fekete_zero_in_01(d);
        let provider = Arc::new(EulerProduct::new(move |p| Some(LocalFactor::linear(p, chi(d, p) as f64))));
        let member = FamilyMember::new(format!("bridge({d})"), d.unsigned_abs(), gf.clone(), provider);
        let v = phi_sign_scan(&member, &ctx, params).unwrap();
        let npd = v.status == VerdictStatus::NotPositiveDefinite;
        if npd != sturm.has_zero() {
            mismatches.push((d, sturm.has_zero(), npd));
        }
    }
    println!("bridge normalization scans: {:?}, mismatches: {:?}", t0.elapsed(), mismatches);
}
