use lfunc::families::dirichlet::{chi, fekete_zero_in_01};

fn p_series(d: i64, x: f64) -> f64 {
    // sum chi(n) x^n to convergence
    let mut acc = 0.0;
    let mut xn = 1.0;
    for n in 1..200_000u64 {
        xn *= x;
        if xn < 1e-300 { break; }
        acc += chi(d, n) as f64 * xn;
    }
    acc
}

fn main() {
    for &d in &[-43i64, -67, -88, -123, 173, 188, -148, -163, -187] {
        let v = fekete_zero_in_01(d);
        let w = v.witness.unwrap();
        // search the dip near the isolated root
        let mut min = f64::INFINITY;
        let mut argmin = 0.0;
        for k in 0..20000 {
            let x = 0.5 + 0.5 * k as f64 / 20000.0;
            let p = p_series(d, x);
            if p < min { min = p; argmin = x; }
        }
        let y = -argmin.ln() / (2.0 * std::f64::consts::PI);
        println!("d={d}: sturm witness x in ({:.4},{:.4}), min P = {min:+.3e} at x={argmin:.5} (y={y:.5})", w.lo(), w.hi());
    }
}
