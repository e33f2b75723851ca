//! Network load model: per-class load, global load, arrival-rate solving and
//! non-stationary event-stream generation with stair-stepped load changes.
//!
//! Load identities are computed on exact rationals so that solving for an
//! arrival rate and recomputing the load round-trips without drift. Only the
//! event sampler touches floating point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::slice::NsprClass;

/// Episodes per training phase; load ruptures land on phase boundaries.
pub const PHASE_SIZE: u64 = 500;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("resource capacity must be positive")]
    NonPositiveCapacity,
    #[error("mean lifespan and per-request units must be positive")]
    ZeroDivisor,
}

/// Exact rational from the shortest decimal representation of `x`, so that a
/// scenario value written as `0.2` means exactly 1/5.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let s = format!("{x}");
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.as_str()),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let mut num: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    if sign < 0 {
        num = -num;
    }
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(num, den))
}

/// Load generated by one request class on one resource:
/// `(1/C) * lambda * mean_lifespan * units_per_request`.
pub fn class_load(
    capacity: &BigRational,
    lambda: &BigRational,
    mean_lifespan: &BigRational,
    units_per_request: &BigRational,
) -> Result<BigRational, LoadError> {
    if !capacity.is_positive() {
        return Err(LoadError::NonPositiveCapacity);
    }
    Ok(lambda * mean_lifespan * units_per_request / capacity)
}

/// Global load for one resource: the sum of the class loads.
pub fn global_load(class_loads: &[BigRational]) -> BigRational {
    class_loads.iter().fold(BigRational::zero(), |acc, x| acc + x)
}

/// Above 1 the system cannot carry the offered load and rejections mount.
pub fn overloaded(global: &BigRational) -> bool {
    *global > BigRational::one()
}

/// Arrival rate that produces `target` load:
/// `lambda = target * C / (mean_lifespan * units_per_request)`.
pub fn solve_arrival_rate(
    target: &BigRational,
    capacity: &BigRational,
    mean_lifespan: &BigRational,
    units_per_request: &BigRational,
) -> Result<BigRational, LoadError> {
    if !capacity.is_positive() {
        return Err(LoadError::NonPositiveCapacity);
    }
    if !mean_lifespan.is_positive() || !units_per_request.is_positive() {
        return Err(LoadError::ZeroDivisor);
    }
    Ok(target * capacity / (mean_lifespan * units_per_request))
}

/// One piece of the load schedule, active from `start_episode` until the next
/// segment begins. `shares` (per-class fractions of the target, summing to 1)
/// default to the classes' own `load_share` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start_episode: u64,
    pub load: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shares: Option<Vec<f64>>,
}

/// The stair step: from `phase * PHASE_SIZE` episodes onward, `delta_load`
/// extra global load on top of the active segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rupture {
    pub phase: u64,
    pub delta_load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSchedule {
    pub segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rupture: Option<Rupture>,
}

impl Default for LoadSchedule {
    fn default() -> Self {
        LoadSchedule {
            segments: vec![Segment {
                start_episode: 0,
                load: 0.4,
                shares: None,
            }],
            rupture: None,
        }
    }
}

impl LoadSchedule {
    pub fn validate(&self, classes: &[NsprClass]) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.segments.is_empty() {
            errs.push("schedule: at least one segment is required".into());
        } else if self.segments[0].start_episode != 0 {
            errs.push("schedule: first segment must start at episode 0".into());
        }
        for w in self.segments.windows(2) {
            if w[1].start_episode <= w[0].start_episode {
                errs.push("schedule: segment start episodes must be strictly increasing".into());
            }
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.load >= 0.0) || !seg.load.is_finite() {
                errs.push(format!("schedule: segment {i} load must be >= 0"));
            }
            let shares = self.segment_shares(seg, classes);
            if shares.len() != classes.len() {
                errs.push(format!(
                    "schedule: segment {i} has {} shares for {} classes",
                    shares.len(),
                    classes.len()
                ));
                continue;
            }
            let mut sum = BigRational::zero();
            for &s in &shares {
                if !(s >= 0.0) {
                    errs.push(format!("schedule: segment {i} has a negative load share"));
                }
                if let Some(r) = rational_from_f64(s) {
                    sum += r;
                }
            }
            if sum != BigRational::one() {
                errs.push(format!("schedule: segment {i} shares must sum to 1"));
            }
        }
        if let Some(r) = &self.rupture {
            if !(r.delta_load >= 0.0) || !r.delta_load.is_finite() {
                errs.push("schedule: rupture delta_load must be >= 0".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    fn segment_shares(&self, seg: &Segment, classes: &[NsprClass]) -> Vec<f64> {
        seg.shares
            .clone()
            .unwrap_or_else(|| classes.iter().map(|c| c.load_share).collect())
    }

    fn segment_at(&self, episode: u64) -> &Segment {
        self.segments
            .iter()
            .rev()
            .find(|s| s.start_episode <= episode)
            .unwrap_or(&self.segments[0])
    }

    /// Exact global CPU-load target in force at `episode`.
    pub fn target_at(&self, episode: u64) -> BigRational {
        let seg = self.segment_at(episode);
        let mut target = rational_from_f64(seg.load).unwrap_or_else(BigRational::zero);
        if let Some(r) = &self.rupture {
            if episode >= r.phase * PHASE_SIZE {
                target += rational_from_f64(r.delta_load).unwrap_or_else(BigRational::zero);
            }
        }
        target
    }

    /// Per-class arrival rates in force at `episode`, from the CPU capacity
    /// of the substrate.
    pub fn lambdas_at(
        &self,
        episode: u64,
        classes: &[NsprClass],
        cpu_capacity: u64,
    ) -> Result<Vec<BigRational>, LoadError> {
        let seg = self.segment_at(episode);
        let shares = self.segment_shares(seg, classes);
        let target = self.target_at(episode);
        let capacity = BigRational::from(BigInt::from(cpu_capacity));
        classes
            .iter()
            .zip(shares)
            .map(|(class, share)| {
                let share = rational_from_f64(share).unwrap_or_else(BigRational::zero);
                let lifespan = rational_from_f64(class.mean_lifespan)
                    .ok_or(LoadError::ZeroDivisor)?;
                let units = BigRational::from(BigInt::from(class.total_cpu()));
                solve_arrival_rate(&(&target * share), &capacity, &lifespan, &units)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Arrival,
    Departure,
}

/// One event of the simulation timeline. `lifespan` is the realized lifespan
/// of the request, carried on both the arrival and its paired departure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub nspr_id: u64,
    pub class_index: usize,
    pub lifespan: f64,
}

/// Poisson arrivals per class with exponential lifespans, episode-indexed
/// against the schedule. Each arrival is one future episode; segment and
/// rupture boundaries switch the rates for all later arrivals. Deterministic
/// given the RNG state. Departures are merged in time order; at equal times
/// departures sort first so capacity is freed before it is claimed.
pub fn generate_events<R: Rng>(
    schedule: &LoadSchedule,
    classes: &[NsprClass],
    cpu_capacity: u64,
    horizon_episodes: u64,
    rng: &mut R,
) -> Result<Vec<SimEvent>, LoadError> {
    let mut events = Vec::with_capacity(2 * horizon_episodes as usize);
    let mut now = 0.0f64;
    let mut cached: Option<(Vec<f64>, BigRational)> = None;
    for episode in 0..horizon_episodes {
        let target = schedule.target_at(episode);
        let lambdas: Vec<f64> = match &cached {
            Some((l, t)) if *t == target => l.clone(),
            _ => {
                let exact = schedule.lambdas_at(episode, classes, cpu_capacity)?;
                let approx: Vec<f64> =
                    exact.iter().map(|r| r.to_f64().unwrap_or(0.0)).collect();
                cached = Some((approx.clone(), target));
                approx
            }
        };
        // Memorylessness lets every inter-arrival be redrawn at each episode,
        // which makes rate switches at episode boundaries exact.
        let mut winner: Option<(f64, usize)> = None;
        for (k, &lambda) in lambdas.iter().enumerate() {
            if lambda <= 0.0 {
                continue;
            }
            let dt = Exp::new(lambda).expect("positive rate").sample(rng);
            if winner.map_or(true, |(t, _)| now + dt < t) {
                winner = Some((now + dt, k));
            }
        }
        let Some((t, class_index)) = winner else {
            break; // all rates zero: no further arrivals
        };
        now = t;
        let lifespan = Exp::new(1.0 / classes[class_index].mean_lifespan)
            .expect("positive rate")
            .sample(rng);
        events.push(SimEvent {
            time: now,
            kind: EventKind::Arrival,
            nspr_id: episode,
            class_index,
            lifespan,
        });
        events.push(SimEvent {
            time: now + lifespan,
            kind: EventKind::Departure,
            nspr_id: episode,
            class_index,
            lifespan,
        });
    }
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then_with(|| {
                let rank = |k: EventKind| match k {
                    EventKind::Departure => 0,
                    EventKind::Arrival => 1,
                };
                rank(a.kind).cmp(&rank(b.kind))
            })
            .then_with(|| a.nspr_id.cmp(&b.nspr_id))
    });
    Ok(events)
}

/// Time-average of in-system CPU demand over capacity, as if every arrival
/// were accepted (infinite capacity). Integrates from `from_time` to the last
/// arrival. This is the measurement side of the load model: it should match
/// the schedule's target.
pub fn measure_cpu_occupancy(
    events: &[SimEvent],
    classes: &[NsprClass],
    cpu_capacity: u64,
    from_time: f64,
) -> f64 {
    let Some(end) = events
        .iter()
        .filter(|e| e.kind == EventKind::Arrival)
        .map(|e| e.time)
        .next_back()
    else {
        return 0.0;
    };
    if end <= from_time {
        return 0.0;
    }
    let mut integral = 0.0f64;
    let mut in_system = 0u64;
    let mut prev = from_time;
    for e in events {
        if e.time > prev {
            let upto = e.time.min(end);
            if upto > prev {
                integral += in_system as f64 * (upto - prev);
                prev = upto;
            }
            if e.time >= end {
                break;
            }
        }
        let units = classes[e.class_index].total_cpu();
        match e.kind {
            EventKind::Arrival => in_system += units,
            EventKind::Departure => in_system = in_system.saturating_sub(units),
        }
    }
    integral / ((end - from_time) * cpu_capacity as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn class_load_hand_values() {
        // 2 * 10 * 5 / 100 = 1
        let got = class_load(&rat(100, 1), &rat(2, 1), &rat(10, 1), &rat(5, 1)).unwrap();
        assert_eq!(got, rat(1, 1));
        // zero arrivals, zero load
        let got = class_load(&rat(100, 1), &rat(0, 1), &rat(10, 1), &rat(5, 1)).unwrap();
        assert!(got.is_zero());
        // 0.504 * 20 * 125 / 6300 = 0.2
        let got = class_load(&rat(6300, 1), &rat(504, 1000), &rat(20, 1), &rat(125, 1)).unwrap();
        assert_eq!(got, rat(1, 5));
        assert_eq!(
            class_load(&rat(0, 1), &rat(1, 1), &rat(1, 1), &rat(1, 1)),
            Err(LoadError::NonPositiveCapacity)
        );
    }

    #[test]
    fn global_load_sums_and_flags_overload() {
        assert_eq!(global_load(&[rat(1, 5), rat(1, 5)]), rat(2, 5));
        assert!(global_load(&[]).is_zero());
        let total = global_load(&[rat(3, 5), rat(3, 5)]);
        assert_eq!(total, rat(6, 5));
        assert!(overloaded(&total));
        assert!(!overloaded(&rat(1, 1)));
    }

    #[test]
    fn solved_rates_match_paper_defaults() {
        // volatile at 20% of a 6300-CPU substrate
        let lam = solve_arrival_rate(&rat(1, 5), &rat(6300, 1), &rat(20, 1), &rat(125, 1)).unwrap();
        assert_eq!(lam, rat(504, 1000));
        // long term: lifespan 500, 250 CPU units per request
        let lam = solve_arrival_rate(&rat(1, 5), &rat(6300, 1), &rat(500, 1), &rat(250, 1)).unwrap();
        assert_eq!(lam, rat(1008, 100_000));
        // zero target solves to zero
        let lam = solve_arrival_rate(&rat(0, 1), &rat(6300, 1), &rat(20, 1), &rat(125, 1)).unwrap();
        assert!(lam.is_zero());
        assert_eq!(
            solve_arrival_rate(&rat(1, 5), &rat(6300, 1), &rat(0, 1), &rat(125, 1)),
            Err(LoadError::ZeroDivisor)
        );
    }

    #[test]
    fn load_round_trip_is_exact_on_random_rationals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let target = rat(rng.random_range(0..10_000), rng.random_range(1..10_000));
            let capacity = rat(rng.random_range(1..100_000), rng.random_range(1..100));
            let lifespan = rat(rng.random_range(1..10_000), rng.random_range(1..1_000));
            let units = rat(rng.random_range(1..10_000), rng.random_range(1..1_000));
            let lambda = solve_arrival_rate(&target, &capacity, &lifespan, &units).unwrap();
            let back = class_load(&capacity, &lambda, &lifespan, &units).unwrap();
            assert_eq!(back, target);
        }
    }

    #[test]
    fn decimal_rationals_are_exact() {
        assert_eq!(rational_from_f64(0.2).unwrap(), rat(1, 5));
        assert_eq!(rational_from_f64(0.504).unwrap(), rat(63, 125));
        assert_eq!(rational_from_f64(-2.5).unwrap(), rat(-5, 2));
        assert_eq!(rational_from_f64(20.0).unwrap(), rat(20, 1));
        assert!(rational_from_f64(f64::NAN).is_none());
    }

    fn default_classes() -> Vec<NsprClass> {
        vec![NsprClass::volatile(), NsprClass::long_term()]
    }

    #[test]
    fn schedule_defaults_solve_to_paper_lambdas() {
        let schedule = LoadSchedule::default();
        let lambdas = schedule.lambdas_at(0, &default_classes(), 6300).unwrap();
        assert_eq!(lambdas[0], rat(504, 1000));
        assert_eq!(lambdas[1], rat(1008, 100_000));
    }

    #[test]
    fn rupture_raises_target_at_phase_boundary() {
        let schedule = LoadSchedule {
            segments: vec![Segment {
                start_episode: 0,
                load: 0.4,
                shares: None,
            }],
            rupture: Some(Rupture {
                phase: 2,
                delta_load: 0.6,
            }),
        };
        assert_eq!(schedule.target_at(999), rat(2, 5));
        assert_eq!(schedule.target_at(1000), rat(1, 1));
    }

    #[test]
    fn zero_rate_schedule_generates_no_arrivals() {
        let schedule = LoadSchedule {
            segments: vec![Segment {
                start_episode: 0,
                load: 0.0,
                shares: None,
            }],
            rupture: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let events =
            generate_events(&schedule, &default_classes(), 6300, 100, &mut rng).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn rates_dropping_to_zero_leave_departures_only() {
        let schedule = LoadSchedule {
            segments: vec![
                Segment {
                    start_episode: 0,
                    load: 0.4,
                    shares: None,
                },
                Segment {
                    start_episode: 50,
                    load: 0.0,
                    shares: None,
                },
            ],
            rupture: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let events =
            generate_events(&schedule, &default_classes(), 6300, 200, &mut rng).unwrap();
        let arrivals = events.iter().filter(|e| e.kind == EventKind::Arrival).count();
        let departures = events.iter().filter(|e| e.kind == EventKind::Departure).count();
        assert_eq!(arrivals, 50);
        assert_eq!(departures, 50);
        let last_arrival = events
            .iter()
            .filter(|e| e.kind == EventKind::Arrival)
            .map(|e| e.time)
            .fold(0.0, f64::max);
        assert!(events.iter().any(|e| e.kind == EventKind::Departure && e.time > last_arrival));
    }

    #[test]
    fn event_stream_is_sorted_paired_and_reproducible() {
        let schedule = LoadSchedule::default();
        let classes = default_classes();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let events = generate_events(&schedule, &classes, 6300, 2000, &mut rng).unwrap();
        assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
        let arrivals: Vec<u64> = events
            .iter()
            .filter(|e| e.kind == EventKind::Arrival)
            .map(|e| e.nspr_id)
            .collect();
        let mut departures: Vec<u64> = events
            .iter()
            .filter(|e| e.kind == EventKind::Departure)
            .map(|e| e.nspr_id)
            .collect();
        departures.sort_unstable();
        assert_eq!(arrivals.len(), 2000);
        assert_eq!(departures, (0..2000).collect::<Vec<_>>());

        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let events2 = generate_events(&schedule, &classes, 6300, 2000, &mut rng2).unwrap();
        assert_eq!(events, events2);
    }

    #[test]
    fn empirical_interarrival_matches_rate() {
        // law of large numbers at lambda = 0.504, averaged over 5 seeds
        let schedule = LoadSchedule {
            segments: vec![Segment {
                start_episode: 0,
                load: 0.2,
                shares: Some(vec![1.0, 0.0]),
            }],
            rupture: None,
        };
        let classes = default_classes();
        let mut mean = 0.0;
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let events = generate_events(&schedule, &classes, 6300, 10_000, &mut rng).unwrap();
            let times: Vec<f64> = events
                .iter()
                .filter(|e| e.kind == EventKind::Arrival)
                .map(|e| e.time)
                .collect();
            mean += times.last().unwrap() / times.len() as f64;
        }
        mean /= 5.0;
        let expected = 1.0 / 0.504;
        assert!(
            (mean - expected).abs() / expected < 0.02,
            "mean inter-arrival {mean} vs expected {expected}"
        );
    }

    #[test]
    fn occupancy_tracks_post_rupture_target() {
        // 0.4 baseline, +0.6 at phase 4: second-segment occupancy near 1.0
        let schedule = LoadSchedule {
            segments: vec![Segment {
                start_episode: 0,
                load: 0.4,
                shares: None,
            }],
            rupture: Some(Rupture {
                phase: 4,
                delta_load: 0.6,
            }),
        };
        let classes = default_classes();
        let mut total = 0.0;
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let events = generate_events(&schedule, &classes, 6300, 28_000, &mut rng).unwrap();
            let rupture_time = events
                .iter()
                .filter(|e| e.kind == EventKind::Arrival)
                .nth(2000)
                .unwrap()
                .time;
            total += measure_cpu_occupancy(&events, &classes, 6300, rupture_time);
        }
        let avg = total / 5.0;
        assert!((avg - 1.0).abs() < 0.05, "post-rupture occupancy {avg}");
    }
}
