//! Small hand-built cases and a seeded random-network generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{compute_ptdf, Branch, BusId, FlowLimit, Forecast, Generator, Network};

fn branch(from: BusId, to: BusId, x: f64, limit: f64) -> Branch {
    Branch {
        from,
        to,
        x,
        limit: if limit.is_finite() {
            FlowLimit::Finite(limit)
        } else {
            FlowLimit::Unlimited
        },
    }
}

fn unit(bus: BusId, pmin: f64, pmax: f64, cost: f64) -> Generator {
    Generator {
        bus,
        pmin,
        pmax,
        cost,
        participates: true,
        synthetic: false,
    }
}

/// Three buses, lines (1,2), (2,3), (1,3) with x = 0.1, reference bus 3.
/// Units: bus 1 `[0, 200]` at 10 $/MWh, bus 2 `[0, 100]` at 20 $/MWh.
pub fn triangle(limit: f64) -> Network {
    triangle_with_limits([limit; 3])
}

pub fn triangle_with_limits(limits: [f64; 3]) -> Network {
    Network::new(
        100.0,
        3,
        vec![1, 2, 3],
        vec![
            branch(1, 2, 0.1, limits[0]),
            branch(2, 3, 0.1, limits[1]),
            branch(1, 3, 0.1, limits[2]),
        ],
        vec![unit(1, 0.0, 200.0, 10.0), unit(2, 0.0, 100.0, 20.0)],
    )
    .expect("triangle case is valid")
}

/// Two buses joined by one line; unit at bus 1, reference bus 2.
pub fn two_bus(limit: f64) -> Network {
    Network::new(
        100.0,
        2,
        vec![1, 2],
        vec![branch(1, 2, 0.1, limit)],
        vec![unit(1, 0.0, 250.0, 10.0)],
    )
    .expect("two-bus case is valid")
}

/// Two triangles {1,2,3} and {4,5,6} joined by the tie-line (3,4).
pub fn two_triangles() -> (Network, Forecast) {
    let net = Network::new(
        100.0,
        1,
        vec![1, 2, 3, 4, 5, 6],
        vec![
            branch(1, 2, 0.10, 90.0),
            branch(2, 3, 0.15, 80.0),
            branch(1, 3, 0.12, 120.0),
            branch(4, 5, 0.10, 70.0),
            branch(5, 6, 0.20, 60.0),
            branch(4, 6, 0.10, 90.0),
            branch(3, 4, 0.08, 100.0),
        ],
        vec![
            unit(1, 20.0, 200.0, 12.0),
            unit(2, 0.0, 120.0, 25.0),
            unit(5, 10.0, 150.0, 18.0),
        ],
    )
    .expect("two-triangle case is valid");
    let fc = Forecast(vec![0.0, 20.0, 90.0, 60.0, 0.0, 80.0]);
    (net, fc)
}

/// Bus-to-area map of [`two_triangles`].
pub fn two_triangles_areas() -> Vec<(BusId, usize)> {
    vec![(1, 1), (2, 1), (3, 1), (4, 2), (5, 2), (6, 2)]
}

#[derive(Debug, Clone)]
pub struct GeneratorOptions {
    pub buses: usize,
    /// Extra chords per bus on top of the ring.
    pub chord_fraction: f64,
    /// Share of buses hosting a unit (at least two units).
    pub unit_fraction: f64,
    /// Total forecast demand as a share of installed capacity.
    pub load_level: f64,
    /// Probability that a line gets no thermal limit.
    pub unlimited_fraction: f64,
    /// Multiplier on limits derived from an unconstrained merit-order dispatch.
    pub limit_scale: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            buses: 6,
            chord_fraction: 0.4,
            unit_fraction: 0.4,
            load_level: 0.55,
            unlimited_fraction: 0.05,
            limit_scale: 1.0,
        }
    }
}

impl GeneratorOptions {
    pub fn with_buses(buses: usize) -> Self {
        GeneratorOptions {
            buses,
            ..Default::default()
        }
    }
}

/// Meshed random network (ring plus chords) with a forecast, deterministic in `seed`.
pub fn generate(opts: &GeneratorOptions, seed: u64) -> (Network, Forecast) {
    assert!(opts.buses >= 2, "need at least two buses");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = opts.buses;
    let ids: Vec<BusId> = (1..=n as BusId).collect();

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if n == 2 {
        pairs.push((0, 1));
    } else {
        for i in 0..n {
            pairs.push((i, (i + 1) % n));
        }
        let chords = (opts.chord_fraction * n as f64).round() as usize;
        let mut attempts = 0;
        let mut added = 0;
        while added < chords && attempts < 50 * (chords + 1) {
            attempts += 1;
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if pairs.iter().any(|&(p, q)| (p.min(q), p.max(q)) == key) {
                continue;
            }
            pairs.push(key);
            added += 1;
        }
    }
    let reactances: Vec<f64> = pairs.iter().map(|_| rng.random_range(0.05..0.4)).collect();

    let n_units = ((opts.unit_fraction * n as f64).round() as usize).clamp(2.min(n), n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut unit_buses: Vec<usize> = order[..n_units].to_vec();
    unit_buses.sort_unstable();
    let mut generators = Vec::new();
    for &b in &unit_buses {
        let pmax: f64 = rng.random_range(50.0..250.0);
        let pmin = if rng.random_bool(0.5) {
            rng.random_range(0.1..0.4) * pmax
        } else {
            0.0
        };
        let cost = rng.random_range(10.0..60.0);
        generators.push(unit(ids[b], pmin, pmax, cost));
    }

    let mut loads: Vec<f64> = (0..n)
        .map(|i| {
            let hosts_unit = unit_buses.contains(&i);
            if !hosts_unit || rng.random_bool(0.3) {
                rng.random_range(10.0..60.0)
            } else {
                0.0
            }
        })
        .collect();
    if loads.iter().all(|l| *l == 0.0) {
        loads[order[n - 1]] = 10.0;
    }
    let capacity: f64 = generators.iter().map(|g| g.pmax).sum();
    let scale = opts.load_level * capacity / loads.iter().sum::<f64>();
    for l in &mut loads {
        *l *= scale;
    }

    let reference = ids[order[0]];
    let provisional: Vec<Branch> = pairs
        .iter()
        .zip(&reactances)
        .map(|(&(a, b), &x)| branch(ids[a], ids[b], x, f64::INFINITY))
        .collect();
    let net = Network::new(100.0, reference, ids.clone(), provisional, generators.clone())
        .expect("generated network is valid");

    // merit-order dispatch ignoring the grid, used only to size limits
    let mut dispatch = vec![0.0; n];
    let mut remaining: f64 = loads.iter().sum();
    let mut by_cost: Vec<&Generator> = generators.iter().collect();
    by_cost.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    for g in &by_cost {
        let k = net.bus_index(g.bus).unwrap();
        dispatch[k] += g.pmin;
        remaining -= g.pmin;
    }
    for g in &by_cost {
        let k = net.bus_index(g.bus).unwrap();
        let take = (g.pmax - g.pmin).min(remaining.max(0.0));
        dispatch[k] += take;
        remaining -= take;
    }
    let injection: Vec<f64> = dispatch.iter().zip(&loads).map(|(d, l)| d - l).collect();
    let ptdf = compute_ptdf(&net).expect("connected");
    let flows = ptdf.flows(&injection);

    let branches: Vec<Branch> = pairs
        .iter()
        .zip(&reactances)
        .zip(&flows)
        .map(|((&(a, b), &x), f)| {
            let limit = if rng.random_bool(opts.unlimited_fraction) {
                f64::INFINITY
            } else {
                let factor: f64 = rng.random_range(0.85..1.8);
                (f.abs() * factor * opts.limit_scale).max(15.0)
            };
            branch(ids[a], ids[b], x, limit)
        })
        .collect();
    let net = Network::new(100.0, reference, ids, branches, generators)
        .expect("generated network is valid");
    (net, Forecast(loads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let opts = GeneratorOptions::with_buses(8);
        let (a, fa) = generate(&opts, 7);
        let (b, fb) = generate(&opts, 7);
        assert_eq!(a, b);
        assert_eq!(fa, fb);
        let (c, _) = generate(&opts, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_load_matches_level() {
        let opts = GeneratorOptions::with_buses(12);
        let (net, fc) = generate(&opts, 3);
        let ratio = fc.total() / net.total_capacity();
        assert!((ratio - opts.load_level).abs() < 1e-9);
    }
}
