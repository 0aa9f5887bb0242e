//! Cross-implementation fixtures: the first sliding-window AR(3) forecasts
//! on the bundled google series, frozen from an independent least-squares
//! implementation (statsmodels AutoReg) run on the same file.

use std::path::Path;

use ocp_core::forecast::{ArParams, Forecaster};
use ocp_core::runner::forecast_series;
use ocp_core::series::load_csv;

const GOOGLE_AR3_FIRST10: [f64; 10] = [
    253.80886479580275,
    253.13020649036372,
    256.4033677158166,
    258.3383253222229,
    255.72653432185075,
    257.6690081806672,
    263.8034841370315,
    266.3057496698244,
    262.94458606158355,
    262.3293236541129,
];

#[test]
fn ar3_matches_independent_least_squares_on_real_data() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/google.csv");
    let series = load_csv(&path, "open", Some("date")).unwrap();
    let forecaster = Forecaster::Ar(ArParams::default());
    let pairs = forecast_series(&series, &forecaster, 365).unwrap();
    assert_eq!(pairs.len(), series.len() - 365);
    for (i, expected) in GOOGLE_AR3_FIRST10.iter().enumerate() {
        let got = pairs[i].0;
        assert!(
            (got - expected).abs() < 1e-6,
            "forecast {i}: {got} vs {expected}"
        );
    }
}
