use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::goal::GoalSet;
use super::model::ChainModel;
use super::policy::Policy;
use super::rng::trajectory_rng;
use crate::error::{Error, Result};

/// Seeded batch of sampled trajectories, stored flat.
///
/// `states` is `n_traj × (horizon + 1) × dim` and `goal_dists` is
/// `n_traj × (horizon + 1)`, both row-major by trajectory. Entries after a
/// divergence are `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBatch {
    pub dim: usize,
    pub initial_state: Vec<f64>,
    pub horizon: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub goal: GoalSet,
    pub states: Vec<f64>,
    pub goal_dists: Vec<f64>,
    pub diverged: Vec<bool>,
}

impl TrajectoryBatch {
    pub fn state(&self, traj: usize, t: usize) -> &[f64] {
        let off = (traj * (self.horizon + 1) + t) * self.dim;
        &self.states[off..off + self.dim]
    }

    /// dist′ along one trajectory, `horizon + 1` entries.
    pub fn dists(&self, traj: usize) -> &[f64] {
        let m = self.horizon + 1;
        &self.goal_dists[traj * m..(traj + 1) * m]
    }

    pub fn n_diverged(&self) -> usize {
        self.diverged.iter().filter(|d| **d).count()
    }

    /// Writes `traj_id, t, x0, …, goal_dist` rows with round-trip float text.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["traj_id".to_string(), "t".to_string()];
        header.extend((0..self.dim).map(|i| format!("x{i}")));
        header.push("goal_dist".into());
        wr.write_record(&header)?;
        let mut row = Vec::with_capacity(self.dim + 3);
        for k in 0..self.n_traj {
            for t in 0..=self.horizon {
                row.clear();
                row.push(k.to_string());
                row.push(t.to_string());
                row.extend(self.state(k, t).iter().map(|x| x.to_string()));
                row.push(self.dists(k)[t].to_string());
                wr.write_record(&row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Trajectory data as read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub dim: usize,
    pub n_traj: usize,
    pub horizon: usize,
    pub states: Vec<f64>,
    pub goal_dists: Vec<f64>,
}

pub fn read_trajectory_csv<R: Read>(r: R) -> Result<TrajectoryTable> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let cols = header.len();
    if cols < 4 || &header[0] != "traj_id" || &header[1] != "t" || &header[cols - 1] != "goal_dist" {
        return Err(Error::Io("trajectory CSV header must be traj_id, t, x0.., goal_dist".into()));
    }
    let dim = cols - 3;
    let mut states = Vec::new();
    let mut goal_dists = Vec::new();
    let (mut n_traj, mut horizon) = (0usize, 0usize);
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|e| Error::Io(format!("row {}, column {}: {e}", line + 2, &header[i])))
        };
        let k: usize = rec[0].parse().map_err(|e| Error::Io(format!("row {}: traj_id: {e}", line + 2)))?;
        let t: usize = rec[1].parse().map_err(|e| Error::Io(format!("row {}: t: {e}", line + 2)))?;
        n_traj = n_traj.max(k + 1);
        horizon = horizon.max(t);
        for i in 0..dim {
            states.push(parse(2 + i)?);
        }
        goal_dists.push(parse(cols - 1)?);
    }
    if goal_dists.len() != n_traj * (horizon + 1) {
        return Err(Error::Io("trajectory CSV is not a full traj × t table".into()));
    }
    Ok(TrajectoryTable { dim, n_traj, horizon, states, goal_dists })
}

/// Runs one trajectory into the given buffers; returns whether it diverged.
pub fn simulate_into(
    model: &ChainModel,
    policy: &Policy,
    goal: &GoalSet,
    s0: &[f64],
    rng: &mut impl rand::Rng,
    states: &mut [f64],
    dists: &mut [f64],
) -> bool {
    let n = model.dim;
    let horizon = dists.len() - 1;
    states[..n].copy_from_slice(s0);
    dists[0] = goal.dist_prime(s0);
    let mut noise = vec![0.0; n];
    for t in 0..horizon {
        let (done, rest) = states.split_at_mut((t + 1) * n);
        let cur = &done[t * n..];
        let a = policy.act(cur);
        model.noise.draw(rng, &mut noise);
        let next = &mut rest[..n];
        model.step(cur, &a, &noise, next);
        if next.iter().any(|x| !x.is_finite()) {
            rest.fill(f64::INFINITY);
            dists[t + 1..].fill(f64::INFINITY);
            return true;
        }
        dists[t + 1] = goal.dist_prime(next);
    }
    false
}

/// Simulates `n_traj` trajectories from `s0`.
///
/// Trajectory `k` draws its noise from stream `k` of `seed`, so the batch is
/// bit-identical across runs and thread counts.
pub fn simulate_batch(
    model: &ChainModel,
    policy: &Policy,
    goal: &GoalSet,
    s0: &[f64],
    horizon: usize,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryBatch> {
    if horizon < 1 || n_traj < 1 {
        return Err(Error::Config(format!("horizon and n_traj must be at least 1, got {horizon}, {n_traj}")));
    }
    if s0.len() != model.dim {
        return Err(Error::Config(format!("initial state has {} components, chain has {}", s0.len(), model.dim)));
    }
    let n = model.dim;
    let m = horizon + 1;
    let mut states = vec![0.0; n_traj * m * n];
    let mut goal_dists = vec![0.0; n_traj * m];
    let mut diverged = vec![false; n_traj];
    states
        .par_chunks_mut(m * n)
        .zip(goal_dists.par_chunks_mut(m))
        .zip(diverged.par_iter_mut())
        .enumerate()
        .for_each(|(k, ((st, ds), dv))| {
            let mut rng = trajectory_rng(seed, k as u64);
            *dv = simulate_into(model, policy, goal, s0, &mut rng, st, ds);
        });
    Ok(TrajectoryBatch {
        dim: n,
        initial_state: s0.to_vec(),
        horizon,
        n_traj,
        seed,
        goal: *goal,
        states,
        goal_dists,
        diverged,
    })
}
