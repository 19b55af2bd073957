//! End-to-end recovery of the generator's injected effects.

use std::collections::BTreeMap;

use tickcost_core::event::{
    affected_securities, birdseye_compare, default_phases, default_schemes, BucketScheme, CompareOptions, DayIndex,
    Metric,
};
use tickcost_core::market::{adjust_for_splits, default_windows, SampleLabel};
use tickcost_core::pipeline::{
    build_features, cost_regression, cost_rows, volume_regression, CostMetric, CostSpec, DifferencingPolicy,
    FitOptions, Lag, Panel, VolumeVariant, VOL_WINDOW,
};
use tickcost_core::synth::{generate_market, generate_orders, SynthConfig};
use tickcost_core::tca::cost_record;

#[test]
fn default_dataset_reproduces_patterns() {
    let cfg = SynthConfig { n_orders: 60_000, ..SynthConfig::default() };
    let market = generate_market(&cfg).unwrap();
    let raw = market.raw_days();
    let adjusted = adjust_for_splits(&raw, &market.splits).unwrap();
    let fx = market.fx_table().unwrap();

    let index = DayIndex::new(&adjusted);
    for (i, phase) in default_phases().iter().enumerate() {
        let set = affected_securities(&index, phase);
        assert_eq!(set.affected, market.affected(i));
        assert!(!set.affected.is_empty());
        for scheme in default_schemes(phase.label) {
            let s = birdseye_compare(
                &index,
                &set.affected,
                phase.label,
                &scheme,
                Metric::Spread,
                CompareOptions::default(),
            )
            .unwrap();
            assert_eq!(s.pct_decreased_affected, 100.0, "{:?} {:?}", phase.label, scheme.label);
        }
    }

    let panel = Panel::build(&adjusted, &fx).unwrap();
    let features = build_features(&panel, &DifferencingPolicy::default(), VOL_WINDOW);
    let windows = default_windows();
    let v1 = volume_regression(&features, &windows[0], VolumeVariant::V1, Lag::None, FitOptions::default()).unwrap();
    let (s, t) = (v1.index_of("spread").unwrap(), v1.index_of("trade_count").unwrap());
    assert!(v1.coefficients[s] < 0.0 && v1.p_values[s] < 0.01);
    assert!(v1.coefficients[t] > 0.0 && v1.p_values[t] < 0.01);

    let (orders, _) = generate_orders(&cfg, &market).unwrap();
    let raw_index = DayIndex::new(&raw);
    let records: Vec<_> = orders
        .iter()
        .map(|o| cost_record(o, raw_index.get(&o.security_id, o.arrival_date).unwrap().volume, &fx).unwrap())
        .collect();
    let rows = cost_rows(&records, &features);
    let mut top = BTreeMap::new();
    for (scheme, names) in [
        (BucketScheme::notional_a(), vec!["notional_10MM+"]),
        (BucketScheme::notional_b(), vec!["notional_10-25MM", "notional_25MM+"]),
    ] {
        for w in &windows {
            let spec = CostSpec {
                metric: CostMetric::Mi,
                liquidity: BucketScheme::liquidity_default(),
                notional: scheme.clone(),
                interactions: false,
            };
            let fit = cost_regression(&rows, w, &spec).unwrap();
            for n in &names {
                top.insert((w.label, n.to_string()), fit.result.coef(n).unwrap());
            }
        }
    }
    for n in ["notional_10MM+", "notional_10-25MM", "notional_25MM+"] {
        let base = top[&(SampleLabel::S1, n.to_string())];
        for l in [SampleLabel::S2, SampleLabel::S3, SampleLabel::S5] {
            let diff = top[&(l, n.to_string())] - base;
            assert!((diff + 10.0).abs() < 2.0, "{n} {l}: {diff}");
        }
    }
}
