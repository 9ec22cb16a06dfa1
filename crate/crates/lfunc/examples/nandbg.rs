use lfunc::kernel::{GammaFactor, KernelCtx, kernel_w_direct};

fn main() {
    let gf = GammaFactor::new(vec![0.0, 1.0]).unwrap();
    let mut ctx = KernelCtx::new(gf.clone()).unwrap();
    let hi = ctx.cutoff();
    ctx.prepare_range(3e-3, hi).unwrap();
    let y0 = 0.0448f64;
    for n in 1..=2700u64 {
        let ny = n as f64 * y0;
        match ctx.w(ny) {
            Ok(v) if v.is_nan() => {
                println!("ctx.w NaN at ny = {ny} (n = {n})");
                let direct = kernel_w_direct(&gf, ny);
                println!("  direct: {direct:?}");
                if n > 5 { break; }
            }
            Err(e) => { println!("err at {ny}: {e}"); break; }
            _ => {}
        }
    }
    println!("done");
}
