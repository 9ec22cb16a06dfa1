fn main() {
    let t0 = std::time::Instant::now();
    let ds = lfunc::families::dirichlet::enumerate_fundamental(201);
    let mut zeros = 0;
    for &d in &ds {
        let v = lfunc::families::dirichlet::fekete_zero_in_01(d);
        if v.has_zero() { zeros += 1; println!("HasZero: d={d} roots={} witness={:?}", v.sign_change_roots, v.witness); }
    }
    println!("{} discriminants, {} with zeros, {:?}", ds.len(), zeros, t0.elapsed());
    // grid oracle over wider range
    let t1 = std::time::Instant::now();
    let mut grid_changes = vec![];
    for &d in &lfunc::families::dirichlet::enumerate_fundamental(501) {
        if lfunc::families::dirichlet::fekete_grid_sign_change(d, 10_000) { grid_changes.push(d); }
    }
    println!("grid sign changes for |d|<=500: {:?} ({:?})", grid_changes, t1.elapsed());
}
