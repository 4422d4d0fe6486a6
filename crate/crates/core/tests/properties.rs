use std::sync::OnceLock;

use proptest::prelude::*;
use spa_core::analysis::{
    cn_theory_case3, common_neighbours, mean_outdeg_theory, region_stats, Adjacency, DegreeHistogram, RegionFilter,
};
use spa_core::estimators::{distance_estimate, distance_from_cn, rho_from_mean_outdeg};
use spa_core::generator::generate;
use spa_core::model::{diagonal_layout, torus_distance};
use spa_core::{Graph64, ModelParams64, Point64};

fn graph() -> &'static (Graph64, Adjacency) {
    static G: OnceLock<(Graph64, Adjacency)> = OnceLock::new();
    G.get_or_init(|| {
        let params = ModelParams64::new(0.7, 2.0, 0.6, 2, 4000).unwrap();
        let g = generate(&params, &diagonal_layout(1.6).unwrap(), 3).unwrap();
        let adj = Adjacency::new(&g);
        (g, adj)
    })
}

fn point(m: usize) -> impl Strategy<Value = Point64> {
    prop::collection::vec(0.0..1.0f64, m).prop_map(|c| Point64::new(c).unwrap())
}

fn triple() -> impl Strategy<Value = (Point64, Point64, Point64)> {
    (1usize..=4).prop_flat_map(|m| (point(m), point(m), point(m)))
}

/// Admissible model parameters together with a subcritical density.
fn params_and_rho() -> impl Strategy<Value = (ModelParams64, f64)> {
    (0.05..0.95f64, 0.1..2.0f64, 0.1..5.0f64, 1usize..=3, 1000usize..1_000_000, 0.01..0.99f64).prop_map(
        |(p, a1, a2, m, n, load)| {
            let params = ModelParams64::new(a1, a2, p, m, n).unwrap();
            (params, load / (p * a1))
        },
    )
}

proptest! {
    #[test]
    fn torus_metric_axioms((a, b, c) in triple()) {
        let m = a.dim() as f64;
        let ab = torus_distance(&a, &b).unwrap();
        let ba = torus_distance(&b, &a).unwrap();
        let bc = torus_distance(&b, &c).unwrap();
        let ac = torus_distance(&a, &c).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(torus_distance(&a, &a).unwrap(), 0.0);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(ab <= m.sqrt() / 2.0 + 1e-12);
    }

    #[test]
    fn density_inversion_is_identity((params, rho) in params_and_rho()) {
        let mean = mean_outdeg_theory(rho, &params).unwrap();
        let back = rho_from_mean_outdeg(mean, &params);
        prop_assert!(((back - rho) / rho).abs() < 1e-12, "rho {} came back as {}", rho, back);
    }

    #[test]
    fn density_estimate_monotone_and_bounded((params, _) in params_and_rho(), a in 0.0..1e6f64, b in 0.0..1e6f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let pole = 1.0 / (params.p * params.a1);
        prop_assert!(rho_from_mean_outdeg(lo, &params) <= rho_from_mean_outdeg(hi, &params));
        prop_assert!(rho_from_mean_outdeg(hi, &params) < pole);
    }

    #[test]
    fn distance_round_trip(
        (params, rho) in params_and_rho(),
        j in 1u32..500,
        extra in 0u32..5000,
        d in 1e-4..0.5f64,
    ) {
        let k = j + extra;
        let cn = cn_theory_case3(k, j, d, &params, rho).unwrap();
        let back = distance_from_cn(k, j, cn, &params, rho).unwrap();
        prop_assert!(((back - d) / d).abs() < 1e-9, "d {} came back as {}", d, back);
    }

    #[test]
    fn distance_estimate_power_laws((params, rho) in params_and_rho(), j in 1u32..200, extra in 0u32..2000, cn in 1u32..100) {
        let k = j + extra;
        let m = params.m as f64;
        let x = params.p * rho * params.a1;
        let gamma = (1.0 - x) / x;
        let d = distance_estimate(k, j, cn, &params, rho).unwrap();
        prop_assert!(d > 0.0);
        let more_cn = distance_estimate(k, j, cn + 1, &params, rho).unwrap();
        let more_k = distance_estimate(k + 1, j, cn, &params, rho).unwrap();
        prop_assert!(more_cn < d);
        prop_assert!(more_k > d);
        let cn_law = (cn as f64 / (cn + 1) as f64).powf(gamma / m);
        let k_law = ((k + 1) as f64 / k as f64).powf(1.0 / m);
        prop_assert!((more_cn / d / cn_law - 1.0).abs() < 1e-9);
        prop_assert!((more_k / d / k_law - 1.0).abs() < 1e-9);
        if j < k {
            let more_j = distance_estimate(k, j + 1, cn, &params, rho).unwrap();
            let j_law = ((j + 1) as f64 / j as f64).powf(gamma / m);
            prop_assert!((more_j / d / j_law - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn predicted_cn_monotone((params, rho) in params_and_rho(), j in 1u32..200, extra in 1u32..2000, d in 1e-3..0.4f64) {
        let k = j + extra;
        let base = cn_theory_case3(k, j, d, &params, rho).unwrap();
        prop_assert!(cn_theory_case3(k, j, d * 1.1, &params, rho).unwrap() < base);
        prop_assert!(cn_theory_case3(k + 1, j, d, &params, rho).unwrap() > base);
        prop_assert!(cn_theory_case3(k, j + 1, d, &params, rho).unwrap() > base);
    }

    #[test]
    fn common_neighbours_symmetric(a in 1u32..=4000, b in 1u32..=4000) {
        prop_assume!(a != b);
        let (g, adj) = graph();
        let uv = common_neighbours(adj, a, b).unwrap();
        prop_assert_eq!(uv, common_neighbours(adj, b, a).unwrap());
        let da = g.node(a).unwrap().in_deg;
        let db = g.node(b).unwrap().in_deg;
        prop_assert!(uv <= da.min(db));
    }

    #[test]
    fn histogram_mass_by_cells(cells in prop::collection::btree_set(0usize..16, 1..16)) {
        let (g, _) = graph();
        let cells: Vec<usize> = cells.into_iter().collect();
        let hist = DegreeHistogram::from_graph(g, &RegionFilter::Cells(cells.clone()));
        let resident = g.nodes().iter().filter(|v| cells.contains(&v.cell)).count() as u64;
        prop_assert_eq!(hist.total(), resident);
        let degree_sum: u64 = hist.counts.iter().map(|(&d, &c)| d as u64 * c).sum();
        let expected: u64 = g.nodes().iter().filter(|v| cells.contains(&v.cell)).map(|v| v.in_deg as u64).sum();
        prop_assert_eq!(degree_sum, expected);
    }
}

#[test]
fn whole_graph_histogram_and_region_totals() {
    let (g, _) = graph();
    let hist = DegreeHistogram::from_graph(g, &RegionFilter::All);
    assert_eq!(hist.total(), g.len() as u64);
    let dense = DegreeHistogram::from_graph(g, &RegionFilter::Dense).total();
    let sparse = DegreeHistogram::from_graph(g, &RegionFilter::Sparse).total();
    assert_eq!(dense + sparse, g.len() as u64);

    let summary = region_stats(g);
    let edges = g.edges().len() as u64;
    assert_eq!(summary.total_edges, edges);
    let within: u64 = summary.regions.iter().map(|r| r.within_edges).sum();
    assert_eq!(within + summary.cross_edges, edges);
    let out: u64 = summary.regions.iter().map(|r| r.out_edges).sum();
    assert_eq!(out, edges);
    assert_eq!(summary.regions.iter().map(|r| r.nodes).sum::<u64>(), g.len() as u64);
}
