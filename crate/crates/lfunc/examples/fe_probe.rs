use lfunc::families::dirichlet::chi;

// Closed-form kernels: even W(y) = 2 exp(-pi y^2), odd W(y) = 2 sqrt(pi) y exp(-pi y^2)
fn phi_exact(d: i64, y: f64, m: usize) -> f64 {
    let odd = d < 0;
    let mut acc = 0.0;
    for n in 1..=m {
        let c = chi(d, n as u64) as f64;
        if c == 0.0 { continue; }
        let ny = n as f64 * y;
        let w = if odd {
            2.0 * std::f64::consts::PI.sqrt() * ny * (-std::f64::consts::PI * ny * ny).exp()
        } else {
            2.0 * (-std::f64::consts::PI * ny * ny).exp()
        };
        acc += c * w;
        if ny > 20.0 { break; }
    }
    acc
}

fn main() {
    for &d in &[-19i64, 53, -43] {
        let q = d.unsigned_abs() as f64;
        println!("d = {d} (1/sqrt q = {:.4}):", 1.0 / q.sqrt());
        for &y in &[0.025, 0.03, 0.031, 0.035, 0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 1.7, 1.75, 1.8, 2.0] {
            let v = phi_exact(d, y, 2_000_000);
            let mirror = phi_exact(d, 1.0 / (q * y), 2_000_000);
            let fe = v - mirror / (q.sqrt() * y);
            println!("  y={y:<6} phi={v:+.6e}  mirror/(sqrt(q) y)={:+.6e}  FE residual={fe:+.2e}", mirror / (q.sqrt() * y));
        }
    }
}
