//! Random instance generators.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::model::{Instance, Machine, Operation};
use crate::{rng_from_seed, Rng};

/// Name of the generator recorded in instance files.
pub const GENERATOR_ID: &str = "batchsched-gen v1 (ChaCha8)";

/// Discrete uniform law over `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformRange {
    pub lo: i64,
    pub hi: i64,
    pub step: i64,
}

impl UniformRange {
    pub const fn new(lo: i64, hi: i64) -> Self {
        UniformRange { lo, hi, step: 1 }
    }

    pub const fn stepped(lo: i64, hi: i64, step: i64) -> Self {
        UniformRange { lo, hi, step }
    }

    pub fn sample(&self, rng: &mut Rng) -> i64 {
        let k = (self.hi - self.lo) / self.step;
        self.lo + self.step * rng.gen_range(0..=k)
    }

    pub fn contains(&self, v: i64) -> bool {
        v >= self.lo && v <= self.hi && (v - self.lo) % self.step == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub m: usize,
    pub o: usize,
    /// Operations per job; `n = ⌊o/q⌋`.
    pub q: usize,
    pub f: usize,
    pub replicate: usize,
    pub alpha_op: f64,
    pub alpha_machine: f64,
    pub assoc_prob: f64,
    pub proc_time: UniformRange,
    pub setup: UniformRange,
    pub weight: UniformRange,
    pub capacity: UniformRange,
    pub size: UniformRange,
    pub seed: u64,
}

impl GenParams {
    /// Large benchmark parameters for one grid cell.
    pub fn large(m: usize, o: usize, q: usize, f: usize, replicate: usize, seed: u64) -> Self {
        GenParams {
            m,
            o,
            q,
            f,
            replicate,
            alpha_op: 0.5,
            alpha_machine: 0.1,
            assoc_prob: 0.05,
            proc_time: UniformRange::new(1, 100),
            setup: UniformRange::new(10, 30),
            weight: UniformRange::new(1, 10),
            capacity: UniformRange::new(10, 15),
            size: UniformRange::new(1, 5),
            seed,
        }
    }

    /// Parameters mimicking the statistics of the small benchmark.
    pub fn small_profile(m: usize, o: usize, seed: u64) -> Self {
        GenParams {
            proc_time: UniformRange::new(1, 30),
            capacity: UniformRange::stepped(80, 100, 10),
            size: UniformRange::stepped(0, 100, 10),
            ..GenParams::large(m, o, 3, 3, 1, seed)
        }
    }

    pub fn num_jobs(&self) -> usize {
        (self.o / self.q.max(1)).max(1)
    }

    /// `m{m}_o{o}_q{q}_f{f}_r{rep}`.
    pub fn name(&self) -> String {
        format!("m{}_o{}_q{}_f{}_r{}", self.m, self.o, self.q, self.f, self.replicate)
    }
}

/// Largest-remainder apportionment of `total` items by `weights`.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if sum <= 0.0 {
        let mut out = vec![total / weights.len(); weights.len()];
        for c in out.iter_mut().take(total % weights.len()) {
            *c += 1;
        }
        return out;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in &order {
        if left == 0 {
            break;
        }
        counts[g] += 1;
        left -= 1;
    }
    counts
}

/// `⌈α(Σp + Σ s_g|F_g|)/m⌉`.
pub fn max_release(alpha: f64, proc_times: &[i64], setups: &[i64], family_sizes: &[usize], m: usize) -> i64 {
    let work: i64 = proc_times.iter().sum::<i64>()
        + setups.iter().zip(family_sizes).map(|(&s, &c)| s * c as i64).sum::<i64>();
    (alpha * work as f64 / m as f64 - 1e-9).ceil().max(0.0) as i64
}

/// Balanced assignment of every operation to one job, followed by independent
/// extra associations with probability `p`.
fn associate(o: usize, n: usize, p: f64, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut job_order: Vec<usize> = (0..n).collect();
    job_order.shuffle(rng);
    let mut pool: Vec<usize> = (0..o).collect();
    pool.shuffle(rng);
    let mut jobs_of = vec![Vec::new(); o];
    let (base, extra) = (o / n, o % n);
    let mut cursor = 0;
    for (t, &j) in job_order.iter().enumerate() {
        let take = base + usize::from(t < extra);
        for &i in &pool[cursor..cursor + take] {
            jobs_of[i].push(j);
        }
        cursor += take;
    }
    for jobs in jobs_of.iter_mut() {
        for j in 0..n {
            if !jobs.contains(&j) && rng.gen_bool(p) {
                jobs.push(j);
            }
        }
        jobs.sort_unstable();
    }
    jobs_of
}

pub fn generate_instance(params: &GenParams) -> Instance {
    let mut rng = rng_from_seed(params.seed);
    let (m, o, f) = (params.m, params.o, params.f);
    let n = params.num_jobs();

    let proc: Vec<i64> = (0..o).map(|_| params.proc_time.sample(&mut rng)).collect();
    let setups: Vec<i64> = (0..f).map(|_| params.setup.sample(&mut rng)).collect();
    let weights: Vec<i64> = (0..n).map(|_| params.weight.sample(&mut rng)).collect();

    let u: Vec<f64> = (0..f).map(|_| rng.gen::<f64>()).collect();
    let family_sizes = largest_remainder(&u, o);
    let mut families: Vec<usize> = family_sizes.iter().enumerate().flat_map(|(g, &c)| std::iter::repeat_n(g, c)).collect();
    families.shuffle(&mut rng);

    let capacities: Vec<i64> = (0..m).map(|_| params.capacity.sample(&mut rng)).collect();
    let eligible: Vec<Vec<usize>> = (0..o)
        .map(|_| {
            let count = rng.gen_range(1..=m);
            let mut ks = index::sample(&mut rng, m, count).into_vec();
            ks.sort_unstable();
            ks
        })
        .collect();
    let sizes: Vec<i64> = eligible
        .iter()
        .map(|ks| {
            let room = ks.iter().map(|&k| capacities[k]).max().unwrap_or(0);
            loop {
                let l = params.size.sample(&mut rng);
                if l <= room {
                    break l;
                }
            }
        })
        .collect();

    let mr_op = max_release(params.alpha_op, &proc, &setups, &family_sizes, m);
    let mr_machine = max_release(params.alpha_machine, &proc, &setups, &family_sizes, m);
    let releases: Vec<i64> = (0..o).map(|_| rng.gen_range(0..=mr_op)).collect();
    let machines: Vec<Machine> = capacities
        .iter()
        .map(|&capacity| Machine { release: rng.gen_range(0..=mr_machine), capacity })
        .collect();

    let jobs_of = associate(o, n, params.assoc_prob, &mut rng);
    let ops = (0..o)
        .map(|i| Operation {
            proc_time: proc[i],
            release: releases[i],
            size: sizes[i],
            family: families[i],
            eligible: eligible[i].clone(),
            jobs: jobs_of[i].clone(),
        })
        .collect();
    Instance::new(machines, setups, weights, ops)
}

/// Mixes a master seed with a grid cell into a per-instance seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut z = master ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        z = splitmix(z ^ splitmix(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const GRID_M: [usize; 2] = [5, 10];
pub const GRID_O: [usize; 3] = [50, 75, 100];
pub const GRID_Q: [usize; 2] = [3, 5];
pub const GRID_F: [usize; 2] = [3, 5];
pub const GRID_REPLICATES: usize = 3;

/// Parameters of the 72-instance grid, in file-name order.
pub fn benchmark_params(master_seed: u64) -> Vec<GenParams> {
    let mut out = Vec::with_capacity(72);
    for &m in &GRID_M {
        for &o in &GRID_O {
            for &q in &GRID_Q {
                for &f in &GRID_F {
                    for rep in 1..=GRID_REPLICATES {
                        let seed = derive_seed(master_seed, &[m as u64, o as u64, q as u64, f as u64, rep as u64]);
                        out.push(GenParams::large(m, o, q, f, rep, seed));
                    }
                }
            }
        }
    }
    out
}

/// The full large benchmark as `(name, instance)` pairs.
pub fn generate_benchmark(master_seed: u64) -> Vec<(String, Instance)> {
    benchmark_params(master_seed).into_iter().map(|p| (p.name(), generate_instance(&p))).collect()
}

pub fn generate_small_profile_instance(m: usize, o: usize, seed: u64) -> Instance {
    generate_instance(&GenParams::small_profile(m, o, seed))
}

/// Grid of small-profile instances: `m ∈ {4, 8}`, `o ∈ {15, 25, 50}`.
pub fn generate_small_profile_set(master_seed: u64, replicates: usize) -> Vec<(String, Instance)> {
    let mut out = Vec::new();
    for m in [4usize, 8] {
        for o in [15usize, 25, 50] {
            for rep in 1..=replicates {
                let seed = derive_seed(master_seed, &[0x5A11, m as u64, o as u64, rep as u64]);
                out.push((format!("s_m{m}_o{o}_r{rep}"), generate_small_profile_instance(m, o, seed)));
            }
        }
    }
    out
}

/// Small random instance with at most `max_ops` operations and `max_machines`
/// machines. Parameters are drawn per instance so that release dates, shared
/// operations, restricted eligibility, zero setups and tight capacities all occur.
pub fn generate_tiny_instance(seed: u64, max_ops: usize, max_machines: usize) -> Instance {
    let mut rng = rng_from_seed(seed);
    let o = rng.gen_range(1..=max_ops.max(1));
    let m = rng.gen_range(1..=max_machines.max(1));
    let f = rng.gen_range(1..=3usize.min(o));
    let n = rng.gen_range(1..=o.min(4));
    let zero_setups = rng.gen_bool(0.15);
    let with_releases = rng.gen_bool(0.7);
    let assoc = [0.0, 0.2, 0.5][rng.gen_range(0..3)];
    let setups: Vec<i64> = (0..f).map(|_| if zero_setups { 0 } else { rng.gen_range(1..=10) }).collect();
    let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=10)).collect();
    let machines: Vec<Machine> = (0..m)
        .map(|_| Machine {
            release: if with_releases { rng.gen_range(0..=8) } else { 0 },
            capacity: rng.gen_range(3..=10),
        })
        .collect();
    let jobs_of = associate(o, n, assoc, &mut rng);
    let ops = (0..o)
        .map(|i| {
            let count = rng.gen_range(1..=m);
            let mut eligible = index::sample(&mut rng, m, count).into_vec();
            eligible.sort_unstable();
            let room = eligible.iter().map(|&k| machines[k].capacity).max().unwrap_or(1);
            Operation {
                proc_time: rng.gen_range(1..=15),
                release: if with_releases { rng.gen_range(0..=25) } else { 0 },
                size: rng.gen_range(1..=room.min(6)),
                family: rng.gen_range(0..f),
                eligible,
                jobs: jobs_of[i].clone(),
            }
        })
        .collect();
    Instance::new(machines, setups, weights, ops)
}
