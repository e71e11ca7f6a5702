//! Bundled synthetic cases.
//!
//! [`stress30`] is the reference case for campaign tests. Its blackouts are all
//! caused by islanding (ratings are generous, so no branch ever overloads),
//! which makes every minimal blackout set computable by hand:
//!
//! * six heavy radials (49 MW) pair with every other radial and with each
//!   other;
//! * a 42 MW pocket fed by a double circuit (branches 3 and 4) is completed
//!   by any of twelve 8.5 MW radials, giving triples that RC finds often;
//! * the same pocket is also completed by each heavy radial, but those
//!   triples only survive the bottom-up search when the final set holds no
//!   other radial, so RC almost never reports them.
//!
//! Total load is 1000 MW, so the 5% threshold is 50 MW.

use std::f64::consts::PI;

use crate::error::Result;
use crate::grid::{Branch, Bus, Generator, GridCase};

/// The stress case as frozen JSON.
pub const STRESS30_JSON: &str = include_str!("../data/stress30.json");
pub const PAIR10_JSON: &str = include_str!("../data/pair10.json");
pub const MESH9_JSON: &str = include_str!("../data/mesh9.json");

pub const STRESS30_HEAVY_MW: f64 = 49.0;
pub const STRESS30_POCKET_MW: f64 = 42.0;
pub const STRESS30_MEDIUM_MW: f64 = 8.5;
pub const STRESS30_LIGHT_MW: f64 = 2.5;
const STRESS30_HEAVY: usize = 6;
const STRESS30_MEDIUM: usize = 12;
const STRESS30_LIGHT: usize = 9;

/// Branch ids of the pocket's double circuit in [`stress30`].
pub const STRESS30_POCKET_FEEDERS: [i64; 2] = [3, 4];

fn bus(id: i64, x_km: f64, y_km: f64, load_mw: f64) -> Bus {
    Bus {
        id,
        x_km,
        y_km,
        load_mw,
        is_slack_candidate: false,
    }
}

fn branch(id: i64, from_bus: i64, to_bus: i64, reactance_pu: f64, rate_a_mw: f64) -> Branch {
    Branch {
        id,
        from_bus,
        to_bus,
        reactance_pu,
        rate_a_mw,
        rate_b_mw: 1.1 * rate_a_mw,
        rate_c_mw: 1.5 * rate_a_mw,
        in_service: true,
    }
}

fn generator(id: i64, bus: i64, p_mw: f64, p_max_mw: f64) -> Generator {
    Generator {
        id,
        bus,
        p_mw,
        p_max_mw,
        p_min_mw: 0.0,
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Generate the 30-bus, 31-branch stress case.
///
/// Bus 1 holds the main unit, bus 2 a second unit on a double circuit
/// (branches 1, 2), bus 3 the pocket (branches 3, 4). Buses 4.. are radial
/// loads fed from bus 1: heavy first, then medium, then light.
pub fn stress30() -> Result<GridCase> {
    let total = 1000.0;
    let mut loads = Vec::new();
    loads.extend([STRESS30_HEAVY_MW; STRESS30_HEAVY]);
    loads.extend([STRESS30_MEDIUM_MW; STRESS30_MEDIUM]);
    loads.extend([STRESS30_LIGHT_MW; STRESS30_LIGHT]);
    let radial_load: f64 = loads.iter().sum();

    let mut hub = bus(1, 0.0, 0.0, total - radial_load - STRESS30_POCKET_MW);
    hub.is_slack_candidate = true;
    let mut buses = vec![
        hub,
        bus(2, -160.0, 90.0, 0.0),
        bus(3, 140.0, 40.0, STRESS30_POCKET_MW),
    ];
    let mut branches = vec![
        branch(1, 1, 2, 0.04, 120.0),
        branch(2, 1, 2, 0.04, 120.0),
        branch(3, 1, 3, 0.05, 100.0),
        branch(4, 1, 3, 0.05, 100.0),
    ];
    // Radials fan out around the hub; the stride scatters neighbouring ids.
    let n = loads.len();
    for (i, &load) in loads.iter().enumerate() {
        let angle = 2.0 * PI * (i as f64 + 0.5) / n as f64;
        let radius = 80.0 + 35.0 * ((i * 7) % 9) as f64;
        let id = 4 + i as i64;
        buses.push(bus(id, round1(radius * angle.cos()), round1(radius * angle.sin()), load));
        let x = ((0.02 + 0.0002 * radius) * 1000.0).round() / 1000.0;
        branches.push(branch(id + 1, 1, id, x, (2.0 * load).max(10.0)));
    }
    let generators = vec![generator(1, 1, 950.0, 1400.0), generator(2, 2, 50.0, 100.0)];
    GridCase::with_default_probability(100.0, buses, branches, generators)
}

/// Ten branches whose only blackout pair is {3, 7}: they double-feed a 60 MW
/// pocket, every other branch feeds a 1 MW radial.
pub fn pair10() -> Result<GridCase> {
    let mut hub = bus(1, 0.0, 0.0, 930.0);
    hub.is_slack_candidate = true;
    let mut buses = vec![hub, bus(2, 50.0, 0.0, 60.0)];
    let mut branches = Vec::new();
    let mut radial = 3;
    for id in 1..=10 {
        if id == 3 || id == 7 {
            branches.push(branch(id, 1, 2, 0.05, 100.0));
        } else {
            let angle = 2.0 * PI * radial as f64 / 10.0;
            buses.push(bus(radial, round1(40.0 * angle.cos()), round1(40.0 * angle.sin()), 1.0));
            branches.push(branch(id, 1, radial, 0.05, 10.0));
            radial += 1;
        }
    }
    let generators = vec![generator(1, 1, 998.0, 1200.0)];
    GridCase::with_default_probability(100.0, buses, branches, generators)
}

/// A meshed nine-bus case (ring plus three chords, three units). N-1 secure;
/// used for power-flow checks and quick demos.
pub fn mesh9() -> Result<GridCase> {
    let mut buses: Vec<Bus> = (0..9)
        .map(|i| {
            let angle = 2.0 * PI * i as f64 / 9.0;
            bus(i + 1, round1(200.0 * angle.cos()), round1(200.0 * angle.sin()), 0.0)
        })
        .collect();
    for (b, load) in [(2, 90.0), (3, 60.0), (5, 125.0), (6, 40.0), (8, 100.0), (9, 35.0)] {
        buses[b - 1].load_mw = load;
    }
    buses[0].is_slack_candidate = true;
    let mut branches = Vec::new();
    for i in 0..9 {
        let x = 0.06 + 0.01 * (i % 3) as f64;
        branches.push(branch(i + 1, i + 1, (i + 1) % 9 + 1, x, 250.0));
    }
    for (id, (f, t)) in [(10, (1, 5)), (11, (4, 8)), (12, (7, 2))] {
        branches.push(branch(id, f, t, 0.1, 250.0));
    }
    let generators = vec![
        generator(1, 1, 200.0, 350.0),
        generator(2, 4, 150.0, 250.0),
        generator(3, 7, 100.0, 200.0),
    ];
    GridCase::with_default_probability(100.0, buses, branches, generators)
}

/// Every bundled case by name.
pub fn bundled() -> Result<Vec<(&'static str, GridCase)>> {
    Ok(vec![
        ("stress30", GridCase::from_json(STRESS30_JSON)?),
        ("pair10", GridCase::from_json(PAIR10_JSON)?),
        ("mesh9", GridCase::from_json(MESH9_JSON)?),
    ])
}
