use lfunc::families::dirichlet::{chi, dirichlet_member, enumerate_fundamental, fekete_zero_in_01, parity};
use lfunc::kernel::KernelCtx;
use lfunc::posdef::{phi_sign_scan, ScanParams, VerdictStatus};

fn phi_exact(d: i64, y: f64) -> f64 {
    let odd = d < 0;
    let mut acc = 0.0;
    for n in 1..=3_000_000u64 {
        let c = chi(d, n) as f64;
        if c == 0.0 { continue; }
        let ny = n as f64 * y;
        if ny > 22.0 { break; }
        let w = if odd {
            2.0 * std::f64::consts::PI.sqrt() * ny * (-std::f64::consts::PI * ny * ny).exp()
        } else {
            2.0 * (-std::f64::consts::PI * ny * ny).exp()
        };
        acc += c * w;
    }
    acc
}

fn main() {
    let mut ctxs = vec![];
    for par in [0u32, 1] {
        let gf = lfunc::kernel::GammaFactor::dirichlet(par);
        let mut ctx = KernelCtx::new(gf).unwrap();
        let hi = ctx.cutoff();
        ctx.prepare_range(1e-2, hi).unwrap();
        ctxs.push(ctx);
    }
    let params = ScanParams::default();
    for &d in &enumerate_fundamental(201) {
        let sturm = fekete_zero_in_01(d);
        let member = dirichlet_member(d);
        let v = phi_sign_scan(&member, &ctxs[parity(d) as usize], params).unwrap();
        let npd = v.status == VerdictStatus::NotPositiveDefinite;
        if npd != sturm.has_zero() {
            let w = v.witness.unwrap();
            println!(
                "d={d} parity={} witness y=({:.5},{:.5}) v=({:+.3e},{:+.3e}) exact=({:+.3e},{:+.3e})",
                parity(d), w.y1, w.y2, w.v1, w.v2, phi_exact(d, w.y1), phi_exact(d, w.y2)
            );
        }
    }
}
