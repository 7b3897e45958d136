use dsfs::lp::SolverTolerances;
use dsfs::network::toy::{toy_a, toy_b, toy_b_contains};
use dsfs::network::{assemble_compact, generate_feeder, GeneratorConfig};
use dsfs::oracle::{bounding_box, Oracle};
use dsfs::robust_box::solve_inner_box;
use dsfs::{seed, CompactModel};
use rand::Rng;

fn desk(s: u64) -> CompactModel<f64> {
    let (f, d) = generate_feeder(s, 12, 18, 2, &GeneratorConfig::default()).unwrap();
    assemble_compact(&f, &d, &SolverTolerances::default()).unwrap()
}

/// Largest total width of a box `[a1,b1]×[a2,b2]` inside toy B's set, over a
/// lattice of corners with step `1/steps`; a box is inside iff its corners are.
fn toy_b_brute_force(steps: i32) -> f64 {
    let vals: Vec<f64> = (-steps..=steps).map(|i| i as f64 / steps as f64).collect();
    let mut best = 0.0f64;
    for &a1 in &vals {
        for &b1 in vals.iter().filter(|&&v| v >= a1) {
            for &a2 in &vals {
                for &b2 in vals.iter().filter(|&&v| v >= a2) {
                    let inside = [[a1, a2], [a1, b2], [b1, a2], [b1, b2]].iter().all(|c| toy_b_contains(c, 1e-12));
                    if inside {
                        best = best.max(b1 - a1 + b2 - a2);
                    }
                }
            }
        }
    }
    best
}

#[test]
fn toy_b_width_equals_enumeration() {
    let brute = toy_b_brute_force(10);
    assert!((brute - 2.0).abs() < 1e-12);
    let b = solve_inner_box(&toy_b::<f64>(), &SolverTolerances::default()).unwrap();
    assert!((b.objective - brute).abs() <= 1e-6, "{}", b.objective);
}

#[test]
fn toy_a_box_is_the_whole_set() {
    let b = solve_inner_box(&toy_a::<f64>(), &SolverTolerances::default()).unwrap();
    assert!((b.p0_minus[0] - 1.0).abs() <= 1e-6 && (b.p0_plus[0] - 3.0).abs() <= 1e-6);
}

#[test]
fn certificate_replays_on_desk_networks() {
    let tols = SolverTolerances::default();
    for s in [7, 8, 9] {
        let model = desk(s);
        let b = solve_inner_box(&model, &tols).unwrap();
        assert!(!b.degenerate);
        assert!(b.policy.certificate_margin(&model) <= tols.feas_tol);
        let mut rng = seed::stream(s, "xi");
        for _ in 0..100 {
            let xi: Vec<f64> = (0..model.t).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let p = b.policy.schedule(&xi);
            let wp = model.w.dot(&ndarray::Array1::from(p.clone()));
            for (l, r) in wp.iter().zip(model.z.iter()) {
                assert!(*l <= r + tols.feas_tol, "seed {s}");
            }
            let mapped = model.substation_output(&p);
            for (m, q) in mapped.iter().zip(b.policy.profile(&xi)) {
                assert!((m - q).abs() <= 1e-8, "seed {s}: {m} vs {q}");
            }
        }
    }
}

#[test]
fn desk_box_is_inner_and_bounded_by_projection() {
    let tols = SolverTolerances::default();
    let model = desk(7);
    let b = solve_inner_box(&model, &tols).unwrap();
    let bbox = bounding_box(&model, 0.0, &tols).unwrap();
    let outer_half: f64 = bbox.lo.iter().zip(&bbox.hi).map(|(l, h)| 0.5 * (h - l)).sum();
    let radius: f64 = b.policy.radius.iter().sum();
    assert!(radius <= outer_half + 1e-9);

    let oracle = Oracle::new(&model);
    let mut rng = seed::stream(1, "inner");
    for _ in 0..300 {
        let q: Vec<f64> = b.p0_minus.iter().zip(&b.p0_plus).map(|(l, h)| rng.random_range(*l..=*h)).collect();
        assert!(oracle.is_feasible(&q).unwrap(), "{q:?}");
    }
}
