use rcquad::events::CrossingEvent;
use rcquad::lattice::{build_region, Lattice, Rect};
use rcquad::measure::{BoundaryCondition, ModelParams};
use rcquad::sampler::{estimate_event, estimate_events, monotone_pair_run, Dynamics, Schedule};

#[test]
fn coupled_pair_stays_ordered_for_ten_thousand_sweeps() {
    let g = build_region(&Lattice::square(), Rect::centered_box(8)).unwrap();
    let ev = CrossingEvent::horizontal(Rect::centered_box(4)).compile(&g).unwrap();
    for q in [1.0, 2.0, 8.0] {
        let params = ModelParams { p: 0.6, q };
        let schedule = Schedule::new(10_000, 3).with_chains(1).with_burn_in(1);
        let out = monotone_pair_run(
            &g,
            &BoundaryCondition::free(&g),
            &BoundaryCondition::wired(&g),
            params,
            std::slice::from_ref(&ev),
            &schedule,
        )
        .unwrap();
        assert!(out[0].low.mean <= out[0].high.mean, "q = {q}");
    }
}

#[test]
fn crossing_probability_grows_with_p() {
    let g = build_region(&Lattice::square(), Rect::centered_box(6)).unwrap();
    let bc = BoundaryCondition::free(&g);
    let ev = CrossingEvent::horizontal(Rect::centered_box(3));
    let schedule = Schedule::new(3000, 8);
    let mut prev: Option<(f64, f64)> = None;
    for p in [0.4, 0.5, 0.6, 0.7] {
        let e = estimate_event(&g, &bc, ModelParams { p, q: 2.0 }, &ev, &schedule).unwrap();
        if let Some((m, s)) = prev {
            assert!(e.mean >= m - 3.0 * (s * s + e.stderr * e.stderr).sqrt(), "p = {p}: {} after {m}", e.mean);
        }
        prev = Some((e.mean, e.stderr));
    }
}

#[test]
fn dynamics_agree_on_a_medium_box() {
    let g = build_region(&Lattice::square(), Rect::centered_box(5)).unwrap();
    let bc = BoundaryCondition::wired(&g);
    let params = ModelParams { p: 0.58, q: 2.0 };
    let events = [
        CrossingEvent::horizontal(Rect::centered_box(2)).compile(&g).unwrap(),
        CrossingEvent::one_arm(3).compile(&g).unwrap(),
    ];
    let schedule = Schedule::new(20_000, 21);
    let a = estimate_events(&g, &bc, params, &events, &schedule, Dynamics::Glauber).unwrap();
    let b = estimate_events(&g, &bc, params, &events, &schedule, Dynamics::ChayesMachta).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let sigma = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
        assert!((x.mean - y.mean).abs() < 4.0 * sigma, "{} vs {} (sigma {sigma})", x.mean, y.mean);
    }
}
