//! Instance generators and instance file I/O.
//!
//! Every seeded generator draws from `ChaCha8Rng::seed_from_u64(seed)`
//! (rand_chacha 0.3) so instances are reproducible across platforms.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::broadcast_sim::{simulate_ignore_deps, Baseline, SimError};
use crate::instance::{BroadcastInstance, Item, ItemId, Request};
use crate::jobsched::{Batch, SeqParJob};
use crate::rational::Rational;
use crate::trace::BroadcastTrace;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("n = {0} must be a perfect square >= 4")]
    NotSquare(usize),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o error on {path}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}")]
    Parse { path: String, source: serde_json::Error },
}

pub fn read_instance(path: &Path) -> Result<BroadcastInstance, WorkloadError> {
    let text =
        fs::read_to_string(path).map_err(|source| WorkloadError::Io { path: path.display().to_string(), source })?;
    BroadcastInstance::from_json(&text)
        .map_err(|source| WorkloadError::Parse { path: path.display().to_string(), source })
}

pub fn write_instance(path: &Path, inst: &BroadcastInstance) -> Result<(), WorkloadError> {
    fs::write(path, inst.to_json() + "\n")
        .map_err(|source| WorkloadError::Io { path: path.display().to_string(), source })
}

fn item(id: &str, length: Rational) -> Item {
    Item { id: id.into(), length }
}

fn request(id: &str, arrival: Rational, items: &[ItemId]) -> Request {
    Request { id: id.into(), arrival, items: items.to_vec() }
}

/// Three items A, B, C of length 3/2; requests {A,B,C} at 0, {A} at 1,
/// {B} at 2 and {C} at 3.
pub fn gen_figure1() -> BroadcastInstance {
    let len = Rational::new(3, 2);
    let id = |s: &str| ItemId::from(s);
    BroadcastInstance {
        items: vec![item("A", len.clone()), item("B", len.clone()), item("C", len)],
        requests: vec![
            request("S1", Rational::zero(), &[id("A"), id("B"), id("C")]),
            request("S2", Rational::from(1), &[id("A")]),
            request("S3", Rational::from(2), &[id("B")]),
            request("S4", Rational::from(3), &[id("C")]),
        ],
    }
}

fn square_root(n: usize) -> Result<usize, WorkloadError> {
    let r = (n as f64).sqrt().round() as usize;
    if n < 4 || r * r != n {
        return Err(WorkloadError::NotSquare(n));
    }
    Ok(r)
}

fn unit_items(n: usize) -> Vec<Item> {
    (1..=n).map(|k| item(&format!("I{k}"), Rational::one())).collect()
}

/// One big request for `big` and a singleton for each item of `rest`, all
/// at time 0.
fn fact1_instance(items: Vec<Item>, big: &[usize], rest: &[usize]) -> BroadcastInstance {
    let ids: Vec<ItemId> = items.iter().map(|i| i.id.clone()).collect();
    let mut requests = vec![request("S0", Rational::zero(), &big.iter().map(|&i| ids[i].clone()).collect::<Vec<_>>())];
    for (k, &i) in rest.iter().enumerate() {
        requests.push(request(&format!("S{}", k + 1), Rational::zero(), &[ids[i].clone()]));
    }
    BroadcastInstance { items, requests }
}

/// The dependency-free probe instance: `n` unit items, each demanded by
/// its own request at time 0.
pub fn fact1_probe_instance(n: usize) -> BroadcastInstance {
    let items = unit_items(n);
    let requests = items
        .iter()
        .enumerate()
        .map(|(k, it)| request(&format!("D{}", k + 1), Rational::zero(), std::slice::from_ref(&it.id)))
        .collect();
    BroadcastInstance { items, requests }
}

#[derive(Clone, Debug)]
pub struct AdversaryReport {
    pub instance: BroadcastInstance,
    pub probe_time: Rational,
    /// Work each item received from the baseline by the probe time.
    pub service: Vec<Rational>,
    pub big_set: Vec<ItemId>,
    pub probe: BroadcastTrace,
}

/// Adaptive adversary against a dependency-ignoring baseline. The baseline
/// runs on the probe instance; at `(n - √n)/s` the `n - √n` most-served
/// items (lowest index first on ties) become one big request and each
/// remaining item gets a singleton request, all at time 0.
pub fn gen_fact1_adversarial(
    n: usize,
    speed: &Rational,
    baseline: &Baseline,
) -> Result<AdversaryReport, WorkloadError> {
    let r = square_root(n)?;
    let probe_inst = fact1_probe_instance(n);
    let probe = simulate_ignore_deps(&probe_inst, speed, baseline)?;
    let probe_time = Rational::from((n - r) as i64) / speed;
    let service: Vec<Rational> =
        (0..n).map(|i| probe.schedule.item_integral(i, &Rational::zero(), &probe_time)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| service[b].cmp(&service[a]).then(a.cmp(&b)));
    let mut big = order[..n - r].to_vec();
    let mut rest = order[n - r..].to_vec();
    big.sort_unstable();
    rest.sort_unstable();
    let instance = fact1_instance(unit_items(n), &big, &rest);
    let big_set = instance.requests[0].items.clone();
    Ok(AdversaryReport { instance, probe_time, service, big_set, probe })
}

/// Randomized hard distribution: a uniform random `(n - √n)`-subset as one
/// request and a singleton for each of the other `√n` items, all at time 0.
/// The subset is the prefix of a Fisher-Yates shuffle of the item indices.
pub fn gen_fact1_randomized(n: usize, seed: u64) -> Result<BroadcastInstance, WorkloadError> {
    let r = square_root(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut big = perm[..n - r].to_vec();
    let mut rest = perm[n - r..].to_vec();
    big.sort_unstable();
    rest.sort_unstable();
    Ok(fact1_instance(unit_items(n), &big, &rest))
}

/// Singleton requests of `inst` still unserved at time `t` in `trace`.
pub fn unsatisfied_singletons(inst: &BroadcastInstance, trace: &BroadcastTrace, t: &Rational) -> usize {
    inst.requests
        .iter()
        .zip(&trace.completions)
        .filter(|(r, c)| r.items.len() == 1 && c.as_ref().is_none_or(|c| c > t))
        .count()
}

/// Parameters of [`gen_random_correlated`]. All sampled values lie on
/// multiples of `grid`.
#[derive(Clone, Debug)]
pub struct RandomParams {
    pub n_items: usize,
    pub n_requests: usize,
    pub zipf_theta: Rational,
    pub max_set: usize,
    pub length_range: (Rational, Rational),
    pub horizon: Rational,
    pub grid: Rational,
    pub seed: u64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            n_items: 4,
            n_requests: 6,
            zipf_theta: Rational::one(),
            max_set: 3,
            length_range: (Rational::new(1, 4), Rational::from(2)),
            horizon: Rational::from(4),
            grid: Rational::new(1, 4),
            seed: 0,
        }
    }
}

fn grid_point(rng: &mut ChaCha8Rng, lo: &Rational, hi: &Rational, grid: &Rational) -> Rational {
    let a = i64::try_from((lo / grid).ceil()).expect("grid range fits i64");
    let b = i64::try_from((hi / grid).floor()).expect("grid range fits i64");
    grid * Rational::from(rng.gen_range(a..=b))
}

/// Random instance with Zipf-correlated item popularity: item `i` (0-based)
/// has weight `1/(i+1)^θ`; each request draws a set size uniformly in
/// `[1, max_set]`, then that many distinct items by weight without
/// replacement; lengths and arrivals are uniform over grid points.
pub fn gen_random_correlated(p: &RandomParams) -> Result<BroadcastInstance, WorkloadError> {
    let bad = |s: &str| Err(WorkloadError::BadParameter(s.into()));
    if p.n_items == 0 || p.max_set == 0 || p.max_set > p.n_items {
        return bad("need 1 <= max_set <= n_items");
    }
    if !p.grid.is_positive() || p.zipf_theta.is_negative() || p.horizon.is_negative() {
        return bad("grid must be > 0, theta and horizon >= 0");
    }
    let (lo, hi) = &p.length_range;
    let lo = lo.clone().max(p.grid.clone());
    if (&lo / &p.grid).ceil() > (hi / &p.grid).floor() {
        return bad("length range contains no positive grid point");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let items: Vec<Item> =
        (0..p.n_items).map(|i| item(&format!("I{i}"), grid_point(&mut rng, &lo, hi, &p.grid))).collect();
    let theta = p.zipf_theta.to_f64();
    let weighted: Vec<(usize, f64)> = (0..p.n_items).map(|i| (i, ((i + 1) as f64).powf(-theta))).collect();
    let mut requests = Vec::with_capacity(p.n_requests);
    for j in 0..p.n_requests {
        let size = rng.gen_range(1..=p.max_set);
        let mut chosen: Vec<usize> = weighted
            .choose_multiple_weighted(&mut rng, size, |w| w.1)
            .expect("weights are positive and finite")
            .map(|w| w.0)
            .collect();
        chosen.sort_unstable();
        let arrival = grid_point(&mut rng, &Rational::zero(), &p.horizon, &p.grid);
        let ids: Vec<ItemId> = chosen.iter().map(|&i| items[i].id.clone()).collect();
        requests.push(request(&format!("S{j}"), arrival, &ids));
    }
    Ok(BroadcastInstance { items, requests })
}

/// Small random instance sized for the exact oracle: up to `max_items`
/// items with lengths in {1/2, 1, 3/2}, up to `max_requests` requests
/// arriving on the 1/2 grid in `[0, 2]`.
pub fn gen_oracle_scale(max_items: usize, max_requests: usize, seed: u64) -> BroadcastInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_items);
    let q = rng.gen_range(1..=max_requests);
    let half = Rational::new(1, 2);
    let params = RandomParams {
        n_items: n,
        n_requests: q,
        zipf_theta: Rational::one(),
        max_set: n,
        length_range: (half.clone(), Rational::new(3, 2)),
        horizon: Rational::from(2),
        grid: half,
        seed: rng.gen(),
    };
    gen_random_correlated(&params).expect("parameters are valid")
}

/// Random instance with randomly drawn shape: 1 to 5 items of length in
/// `[1/4, 2]`, 1 to 6 requests of up to all items, arrivals in `[0, 4]`,
/// Zipf exponent 1.
pub fn gen_small_random(seed: u64) -> BroadcastInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=5);
    let params = RandomParams {
        n_items: n,
        n_requests: rng.gen_range(1..=6),
        max_set: rng.gen_range(1..=n),
        seed: rng.gen(),
        ..RandomParams::default()
    };
    gen_random_correlated(&params).expect("parameters are valid")
}

/// Random batches on the 1/4 grid: up to `max_batches` batches of up to
/// `max_jobs` jobs, arrivals in `[0, 3]`, works in `[0, 2]`.
pub fn gen_random_batches(max_batches: usize, max_jobs: usize, seed: u64) -> Vec<Batch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Rational::new(1, 4);
    let zero = Rational::zero();
    let nb = rng.gen_range(1..=max_batches);
    (0..nb)
        .map(|b| {
            let arrival = grid_point(&mut rng, &zero, &Rational::from(3), &grid);
            let nj = rng.gen_range(1..=max_jobs);
            let jobs = (0..nj)
                .map(|k| {
                    let seq = grid_point(&mut rng, &zero, &Rational::from(2), &grid);
                    let par = grid_point(&mut rng, &zero, &Rational::from(2), &grid);
                    SeqParJob::new(format!("J{k}"), seq, par)
                })
                .collect();
            Batch { id: format!("B{b}"), arrival, jobs }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_instance;

    #[test]
    fn figure1_is_valid() {
        assert!(validate_instance(&gen_figure1()).is_valid());
    }

    #[test]
    fn adversary_n4_equi_per_item() {
        let rep = gen_fact1_adversarial(4, &Rational::one(), &Baseline::EquiPerItem).unwrap();
        assert_eq!(rep.probe_time, Rational::from(2));
        assert!(rep.service.iter().all(|s| s == &Rational::new(1, 2)));
        assert_eq!(rep.big_set, vec![ItemId::from("I1"), ItemId::from("I2")]);
        assert_eq!(rep.instance.requests.len(), 3);
        assert_eq!(rep.instance.requests[1].items, vec![ItemId::from("I3")]);
        assert_eq!(rep.instance.requests[2].items, vec![ItemId::from("I4")]);
    }

    #[test]
    fn adversary_rejects_non_square() {
        assert!(matches!(
            gen_fact1_adversarial(5, &Rational::one(), &Baseline::EquiPerItem),
            Err(WorkloadError::NotSquare(5))
        ));
    }

    #[test]
    fn randomized_structure_and_determinism() {
        let a = gen_fact1_randomized(4, 11).unwrap();
        assert_eq!(a.requests.len(), 3);
        assert_eq!(a.requests[0].items.len(), 2);
        let mut all: Vec<ItemId> = a.requests.iter().flat_map(|r| r.items.clone()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 4);
        assert_eq!(a, gen_fact1_randomized(4, 11).unwrap());
    }

    #[test]
    fn correlated_generator_properties() {
        let p = RandomParams { max_set: 1, seed: 3, ..RandomParams::default() };
        let inst = gen_random_correlated(&p).unwrap();
        assert!(inst.requests.iter().all(|r| r.items.len() == 1));
        assert!(validate_instance(&inst).is_valid());
        assert_eq!(inst.to_json(), gen_random_correlated(&p).unwrap().to_json());
    }

    #[test]
    fn uniform_popularity_at_theta_zero() {
        let p = RandomParams {
            n_items: 10,
            n_requests: 10_000,
            zipf_theta: Rational::zero(),
            max_set: 1,
            seed: 42,
            ..RandomParams::default()
        };
        let inst = gen_random_correlated(&p).unwrap();
        let mut counts = vec![0i64; 10];
        for r in &inst.requests {
            counts[inst.item_index(&r.items[0]).unwrap()] += 1;
        }
        let sigma = (10_000.0f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!(((c - 1000) as f64).abs() <= 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn random_batches_are_valid() {
        for seed in 0..20 {
            let b = gen_random_batches(5, 4, seed);
            crate::jobsched::validate_batches(&b).unwrap();
        }
    }
}
