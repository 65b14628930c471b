use vinefit::penalized::*;
use vinefit::qp::null_space;

#[test]
fn dbg_penalty_spectrum() {
    let spec = BasisSpec::pbern().with_k(8);
    let basis = build_basis(spec).unwrap();
    let p = build_penalty(&basis);
    let (a, _) = build_margin_constraints(&basis);
    let z = null_space(&a);
    println!("dim {} z cols {}", p.nrows(), z.ncols());
    let pz = z.transpose() * &p * &z;
    let eig = pz.symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("smallest 10 eigs of Pz: {:?}", &ev[..10]);
    println!("largest: {:?}", &ev[ev.len()-3..]);
    let near_zero = ev.iter().filter(|&&e| e < 1e-8 * ev[ev.len()-1]).count();
    println!("near-zero count: {near_zero}");
    // also raw P
    let eigp = p.clone().symmetric_eigen();
    let mut evp: Vec<f64> = eigp.eigenvalues.iter().copied().collect();
    evp.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("smallest 8 eigs of P: {:?}", &evp[..8]);
}

#[test]
fn dbg_hessian_scale() {
    use vinefit::families::FamilySpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    let mut rng = ChaCha12Rng::seed_from_u64(21);
    let (u, v): (Vec<f64>, Vec<f64>) = FamilySpec::independence().sample_pair(400, &mut rng).into_iter().unzip();
    let spec = BasisSpec::pbern().with_k(8);
    let (hz, pz) = debug_projected_mats(&u, &v, spec);
    let eh = hz.clone().symmetric_eigen();
    let mut ev: Vec<f64> = eh.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("Hz eig min {:?} max {:?}", &ev[..4], &ev[ev.len()-4..]);
    for lambda in [1e4f64, 1e2, 1.0, 1e-2, 1e-4] {
        // eigen-free direct trace
        let m = &hz + &pz * lambda;
        let chol = m.clone().cholesky().unwrap();
        let tr = chol.solve(&hz).trace();
        println!("lambda {lambda:9.1e} trace {tr:9.3}");
    }
}
