use proptest::prelude::*;
use radpath::oracle::{brute_force_path, build_graph, ground_truth, path_metrics, GridPath};
use radpath::scenario::builtin;
use radpath::{Cell, PathError, Scenario, Source};

fn tiny_scenario() -> impl Strategy<Value = Scenario> {
    (1usize..=4, 1usize..=4)
        .prop_filter("at least two cells", |(w, h)| w * h >= 2)
        .prop_flat_map(|(w, h)| {
            let cell = (0..w, 0..h).prop_map(|(x, y)| Cell::new(x, y));
            let source = (cell.clone(), 0.01f64..100.0)
                .prop_map(|(position, strength)| Source { position, strength });
            (cell.clone(), cell, proptest::collection::vec(source, 0..=2))
                .prop_filter("distinct endpoints", |(s, e, _)| s != e)
                .prop_map(move |(start, exit, sources)| Scenario {
                    width: w,
                    height: h,
                    start,
                    exit,
                    sources,
                    ..Scenario::default()
                })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn dijkstra_matches_enumeration(sc in tiny_scenario()) {
        let gt = ground_truth(&sc, 0.9);
        let bf = brute_force_path(&sc, 0.9).unwrap();
        prop_assert!((gt.edge_weight - bf.edge_weight).abs() <= 1e-9 * bf.edge_weight.max(1.0));
        prop_assert_eq!(gt.step_count, bf.step_count);
        prop_assert_eq!(&gt.cells, &bf.cells);
        prop_assert_eq!(gt.cells[0], sc.start);
        prop_assert_eq!(*gt.cells.last().unwrap(), sc.exit);
    }

    #[test]
    fn scaling_strengths_keeps_the_route(sc in tiny_scenario(), c in 0.01f64..100.0) {
        let scaled = Scenario {
            sources: sc.sources.iter().map(|s| Source { strength: s.strength * c, ..*s }).collect(),
            ..sc.clone()
        };
        let (g, gs) = (build_graph(&sc), build_graph(&scaled));
        for (a, b) in g.adjacency.iter().flatten().zip(gs.adjacency.iter().flatten()) {
            prop_assert_eq!(a.0, b.0);
            prop_assert!((b.1 - c * a.1).abs() <= 1e-12 * b.1.abs().max(1e-300));
        }
        let (p, ps) = (ground_truth(&sc, 0.9), ground_truth(&scaled, 0.9));
        prop_assert_eq!(p.cells, ps.cells);
    }

    #[test]
    fn reversing_keeps_the_weight(sc in tiny_scenario()) {
        let rev = Scenario { start: sc.exit, exit: sc.start, ..sc.clone() };
        let (p, r) = (ground_truth(&sc, 0.9), ground_truth(&rev, 0.9));
        prop_assert!((p.edge_weight - r.edge_weight).abs() <= 1e-9 * p.edge_weight.max(1.0));
        prop_assert_eq!(p.step_count, r.step_count);
    }
}

#[test]
fn every_small_grid_shape_agrees() {
    let mut rng = radpath::seeded_rng(2024);
    use rand::Rng as _;
    for w in 1..=4usize {
        for h in 1..=4usize {
            if w * h < 2 {
                continue;
            }
            for _ in 0..25 {
                let n = rng.random_range(0..=2);
                let sources = (0..n)
                    .map(|_| Source {
                        position: Cell::new(rng.random_range(0..w), rng.random_range(0..h)),
                        strength: rng.random_range(0.01..100.0),
                    })
                    .collect();
                let sc = Scenario {
                    width: w,
                    height: h,
                    start: Cell::new(0, h - 1),
                    exit: Cell::new(w - 1, 0),
                    sources,
                    ..Scenario::default()
                };
                if sc.start == sc.exit {
                    continue;
                }
                assert_eq!(ground_truth(&sc, 0.9), brute_force_path(&sc, 0.9).unwrap(), "{sc:?}");
            }
        }
    }
}

#[test]
fn builtin_routes_are_valid_and_consistent() {
    for (name, exp) in radpath::scenario::builtin_scenarios() {
        let sc = exp.scenario;
        let p = ground_truth(&sc, 0.9);
        assert_eq!(p.cells[0], sc.start, "{name}");
        assert_eq!(*p.cells.last().unwrap(), sc.exit, "{name}");
        let m = path_metrics(&p.cells, &sc, 0.9).unwrap();
        assert_eq!(m.step_count, p.step_count);
        assert_eq!(GridPath::new(p.cells.clone(), &sc, 0.9).unwrap(), p);
    }
}

#[test]
fn case_i_route_is_the_diagonal() {
    let sc = builtin("case_i").unwrap().scenario;
    let p = ground_truth(&sc, 0.9);
    assert_eq!(p.cells, (0..10).map(|k| Cell::new(k, 9 - k)).collect::<Vec<_>>());
    assert_eq!(p.step_count, 9);
}

#[test]
fn brute_force_refuses_large_grids() {
    let sc = Scenario { width: 5, height: 4, start: Cell::new(0, 0), exit: Cell::new(4, 3), ..Scenario::default() };
    assert_eq!(brute_force_path(&sc, 0.9), Err(PathError::TooLarge { cells: 20, limit: 16 }));
}

#[test]
fn invalid_routes_rejected() {
    let sc = Scenario::default();
    let c = |x, y| Cell::new(x, y);
    assert_eq!(path_metrics(&[], &sc, 0.9), Err(PathError::Empty));
    assert!(matches!(path_metrics(&[c(0, 0), c(2, 0)], &sc, 0.9), Err(PathError::NotAdjacent(..))));
    assert!(matches!(path_metrics(&[c(0, 0), c(1, 0), c(0, 0)], &sc, 0.9), Err(PathError::Repeated(_))));
    assert!(matches!(path_metrics(&[c(0, 0), c(10, 0)], &sc, 0.9), Err(PathError::OutOfGrid(_))));
}
