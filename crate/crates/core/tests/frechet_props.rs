use proptest::prelude::*;
use radpath::frechet::discrete_frechet;
use radpath::Cell;

/// Minimum over every monotone coupling of the largest paired distance,
/// by explicit enumeration of coupling sequences.
fn exhaustive(p: &[Cell], q: &[Cell]) -> f64 {
    fn walk(p: &[Cell], q: &[Cell], i: usize, j: usize, worst: f64, best: &mut f64) {
        let worst = worst.max(p[i].dist(&q[j]));
        if worst >= *best {
            return;
        }
        if i + 1 == p.len() && j + 1 == q.len() {
            *best = worst;
            return;
        }
        if i + 1 < p.len() {
            walk(p, q, i + 1, j, worst, best);
        }
        if j + 1 < q.len() {
            walk(p, q, i, j + 1, worst, best);
        }
        if i + 1 < p.len() && j + 1 < q.len() {
            walk(p, q, i + 1, j + 1, worst, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(p, q, 0, 0, 0.0, &mut best);
    best
}

fn path(max_len: usize) -> impl Strategy<Value = Vec<Cell>> {
    proptest::collection::vec((0usize..10, 0usize..10).prop_map(|(x, y)| Cell::new(x, y)), 1..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn matches_exhaustive_couplings(p in path(6), q in path(6)) {
        prop_assert_eq!(discrete_frechet(&p, &q).unwrap(), exhaustive(&p, &q));
    }

    #[test]
    fn symmetric(p in path(15), q in path(15)) {
        prop_assert_eq!(discrete_frechet(&p, &q).unwrap(), discrete_frechet(&q, &p).unwrap());
    }

    #[test]
    fn identity_and_endpoint_bound(p in path(15), q in path(15)) {
        prop_assert_eq!(discrete_frechet(&p, &p).unwrap(), 0.0);
        let d = discrete_frechet(&p, &q).unwrap();
        let bound = p[0].dist(&q[0]).max(p[p.len() - 1].dist(&q[q.len() - 1]));
        prop_assert!(d >= bound);
    }

    #[test]
    fn translation_invariant(p in path(15), q in path(15), dx in 0usize..20, dy in 0usize..20) {
        let shift = |v: &[Cell]| v.iter().map(|c| Cell::new(c.x + dx, c.y + dy)).collect::<Vec<_>>();
        prop_assert_eq!(discrete_frechet(&p, &q).unwrap(), discrete_frechet(&shift(&p), &shift(&q)).unwrap());
    }

    #[test]
    fn bounded_by_largest_pair_distance(p in path(10), q in path(10)) {
        let d = discrete_frechet(&p, &q).unwrap();
        let max = p.iter().flat_map(|a| q.iter().map(move |b| a.dist(b))).fold(0.0, f64::max);
        prop_assert!(d <= max);
    }
}
