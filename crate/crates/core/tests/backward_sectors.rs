use selfsim::generator::{generate_backward, preset, shock_neighbourhoods, Separator};
use selfsim::numerics::Vector;
use selfsim::profile::{saltus_decompose, sector_layout};
use selfsim::system::{build_system, SystemDef};
use selfsim::verifier::{classify_structure, lipschitz_at_resonance, verify, DEFAULT_PAIRS};
use selfsim::SystemConfig;

fn euler() -> SystemDef {
    build_system(&SystemConfig::euler(1.4, [1.0, 2.0, 0.0], 0.05)).unwrap()
}

#[test]
fn geometric_train_accumulates_at_a_resonance_point() {
    let sys = euler();
    let layout = sector_layout(&sys).unwrap();
    let p = preset(&sys, &layout, "backward-geometric", Some(50), 0).unwrap();
    assert!(verify(&sys, &layout, &p, DEFAULT_PAIRS).unwrap().pass);
    let xs: Vec<f64> = p.jumps().iter().map(|j| p.jump_xi(j)).collect();
    assert!(xs.len() > 20);
    // shock positions converge; the limit is approximated by the last one
    let limit = *xs.last().unwrap();
    let gaps: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(gaps.last().unwrap() < &1e-9);
    let v = p.evaluate(&sys, limit).unwrap();
    assert!((sys.lambda(&v, 2).unwrap() - limit).abs() <= 1e-6);
}

#[test]
fn geometric_jump_part_is_cauchy() {
    let sys = euler();
    let layout = sector_layout(&sys).unwrap();
    let p = preset(&sys, &layout, "backward-geometric", Some(50), 0).unwrap();
    let d = saltus_decompose(&sys, &p).unwrap();
    let mut partial = Vec::new();
    let mut acc = Vector::zeros(sys.dim);
    for j in &d.jumps {
        acc += &j.jump;
        partial.push(acc.clone());
    }
    let last = partial.last().unwrap();
    let k = partial.iter().position(|s| (s - last).norm() <= 1e-10).unwrap();
    assert!(k + 1 < partial.len(), "partial sums only settle at the final term");
    for s in &partial[k..] {
        assert!((s - last).norm() <= 1e-10);
    }
    let sizes: f64 = d.jumps.iter().map(|j| j.jump.norm()).sum();
    assert!((sizes - d.total_jump).abs() < 1e-12);
    // pointwise convergence of the jump part
    let right = *p.breakpoints().last().unwrap() + 1e-3;
    assert!((d.saltus(right) - last).norm() < 1e-15);
}

#[test]
fn equal_train_neighbourhoods_fill_at_most_the_sector() {
    let sys = euler();
    let layout = sector_layout(&sys).unwrap();
    let p = preset(&sys, &layout, "backward-train", Some(20), 0).unwrap();
    assert!(classify_structure(&sys, &layout, &p).unwrap().pass);
    let hoods = shock_neighbourhoods(&sys, &p, 2).unwrap();
    assert_eq!(hoods.len(), 20);
    let total: f64 = hoods.iter().map(|(a, b)| (b - a).abs()).sum();
    assert!(total <= layout.sectors[2].width());
}

#[test]
fn single_backward_shock_mirrors_the_forward_one() {
    let sys = euler();
    let layout = sector_layout(&sys).unwrap();
    let s = sys.epsilon / 8.0;
    let p = generate_backward(&sys, &layout, 2, &[s], &[Separator::Constant, Separator::Constant]).unwrap();
    let j = &p.jumps()[0];
    // same family, opposite halfplane and opposite sign of the strength
    assert_eq!(p.halfplane, sys.fields[2].forward_halfplane.opposite());
    assert!(j.strength > 0.0);
    assert!((j.size() - s).abs() < 1e-3 * s);
}

#[test]
fn lipschitz_bound_at_neighbourhood_ends() {
    let sys = euler();
    let layout = sector_layout(&sys).unwrap();
    for name in ["backward-shock", "backward-train"] {
        let p = preset(&sys, &layout, name, Some(10), 0).unwrap();
        for (j, (_, sigma_plus)) in p.jumps().iter().zip(shock_neighbourhoods(&sys, &p, 2).unwrap()) {
            let q = lipschitz_at_resonance(&sys, &p, sigma_plus).unwrap();
            assert!(q.is_finite());
            // the nearest jump is at least delta_L |[V]| away
            assert!(q <= 2.0 / sys.delta_l, "{name}: quotient {q} at {sigma_plus} (jump {})", j.size());
        }
    }
}
