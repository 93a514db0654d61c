mod common;

use sdpcolor_core::graph::{find_clique, validate_coloring, Graph};
use sdpcolor_core::heuristics::*;
use sdpcolor_core::numlin::SymMatrix;
use sdpcolor_core::Config;

use common::{fig, k4_fixtures};

fn both() -> [Algorithm; 2] {
    [Algorithm::Chained, Algorithm::Direct]
}

fn check_invariants(g: &Graph, out: &HeuristicOutcome) {
    let n = g.n();
    assert!(out.solves <= 4 * n * n, "solve budget exceeded: {}", out.solves);
    assert_eq!(Some(out.clique.clone()), find_clique(g, 4));
    // Accepted vertices are never evicted.
    for e in out.log.iter().filter(|e| e.action == LogAction::Accept) {
        assert!(out.aligned.contains(&e.vertex), "vertex {} lost after acceptance", e.vertex + 1);
    }
    if out.status == HeuristicStatus::Colored {
        let c = out.coloring.as_ref().unwrap();
        assert!(validate_coloring(g, c));
        let anchors: Vec<usize> = out.clique.iter().map(|&v| c.color(v)).collect();
        let mut sorted = anchors.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 4, "clique vertices must get distinct colors");
        assert_eq!(out.final_rank, 3);
    }
}

#[test]
fn modified_solve_examples() {
    let cfg = Config::default();
    let s = solve_modified(&Graph::complete(4), &SymMatrix::zeros(4), &cfg).unwrap();
    assert!(s.accepted);
    assert_eq!(s.rank_primal, 3);
    let g = fig("fig3");
    let s = solve_modified(&g, &SymMatrix::zeros(g.n()), &cfg).unwrap();
    assert!(s.rank_primal > 3);
}

#[test]
fn obstacle_graph_fails_after_one_vertex() {
    let g = fig("fig3");
    for algo in both() {
        let out = run_heuristic(&g, algo, &Config::default()).unwrap();
        assert_eq!(out.status, HeuristicStatus::Failed, "{algo:?}");
        let beyond: Vec<usize> = out.aligned.iter().copied().filter(|v| !out.clique.contains(v)).collect();
        assert_eq!(beyond, vec![0], "{algo:?}");
        assert!(out.reason.is_some());
        // Vertex 1 is matched to vertex 6 of the clique.
        assert!(out.log.iter().any(|e| e.action == LogAction::Accept && e.vertex == 0 && e.anchor == 5));
        check_invariants(&g, &out);
    }
}

#[test]
fn kempe_graphs_are_colored() {
    for name in ["fig4", "fig5"] {
        let g = fig(name);
        for algo in both() {
            let out = run_heuristic(&g, algo, &Config::default()).unwrap();
            assert_eq!(out.status, HeuristicStatus::Colored, "{name} {algo:?}");
            check_invariants(&g, &out);
        }
    }
}

#[test]
fn small_corpus_is_colored_by_both() {
    let cfg = Config::default();
    for g in k4_fixtures(5..=9) {
        assert!(heuristic1(&g, &cfg).unwrap().status == HeuristicStatus::Colored);
        let out = heuristic2(&g, &cfg).unwrap();
        assert_eq!(out.status, HeuristicStatus::Colored);
        check_invariants(&g, &out);
    }
}

#[test]
fn runs_are_deterministic() {
    let g = fig("fig3");
    for algo in both() {
        let a = run_heuristic(&g, algo, &Config::default()).unwrap();
        let b = run_heuristic(&g, algo, &Config::default()).unwrap();
        assert_eq!(a.log_text(), b.log_text());
        assert_eq!((a.status, a.solves, a.aligned), (b.status, b.solves, b.aligned));
    }
}

#[test]
fn log_lines_are_well_formed() {
    let out = heuristic1(&fig("fig5"), &Config::default()).unwrap();
    let text = out.log_text();
    assert_eq!(text.lines().count(), out.log.len());
    for line in text.lines() {
        let keys: Vec<&str> = line.split(' ').map(|kv| kv.split('=').next().unwrap()).collect();
        assert_eq!(keys, ["step", "vertex", "anchor", "action", "rank"], "{line}");
        let action = line.split("action=").nth(1).unwrap().split(' ').next().unwrap();
        assert!(["try", "accept", "reject", "rebuild"].contains(&action));
    }
}

#[test]
fn algorithm_numbers() {
    assert_eq!(Algorithm::from_number(1), Some(Algorithm::Chained));
    assert_eq!(Algorithm::from_number(2), Some(Algorithm::Direct));
    assert_eq!(Algorithm::from_number(3), None);
    assert_eq!(Algorithm::Direct.number(), 2);
}

#[test]
fn graphs_without_k4_are_rejected() {
    assert!(heuristic1(&Graph::cycle(6), &Config::default()).is_err());
}

#[test]
fn colored_runs_certify_with_full_dual_rank() {
    let cfg = Config::default();
    for g in [fig("fig4"), fig("fig5"), Graph::complete(4)] {
        let out = heuristic2(&g, &cfg).unwrap();
        let r = finalize_certificate(&g, &out, &cfg).unwrap();
        assert!(r.verdict, "{}", r.to_text());
        assert_eq!(r.rank, g.n() - 3);
    }
    let g = fig("fig3");
    let failed = heuristic1(&g, &cfg).unwrap();
    assert!(finalize_certificate(&g, &failed, &cfg).is_err());
}
