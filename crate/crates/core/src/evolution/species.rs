use rayon::prelude::*;

use super::NeatConfig;
use crate::genome::GenomeTensors;
use crate::ops::{distance_indexed, GeneIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub id: u64,
    pub representative: GenomeTensors,
    /// Population indices, ascending.
    pub members: Vec<usize>,
    pub best_fitness: f64,
    /// Generations since `best_fitness` last improved.
    pub stagnation: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpeciesState {
    /// Ascending by id.
    pub species: Vec<Species>,
    pub next_id: u64,
}

impl SpeciesState {
    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.species.iter().map(|s| s.members.len()).collect()
    }
}

fn argmin(ds: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, d) in ds.enumerate() {
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Assigns every genome to a species.
///
/// Each genome joins the first species (ascending id) whose representative
/// is closer than `compatibility_threshold`; failing that it founds a new
/// species while fewer than `max_species` exist, otherwise it joins the
/// nearest representative. Surviving species then take as representative
/// the member closest to the previous one; founders represent new species.
pub fn speciate(pop: &[GenomeTensors], prev: &SpeciesState, cfg: &NeatConfig) -> SpeciesState {
    let threshold = cfg.compatibility_threshold;
    let index: Vec<GeneIndex> = pop.par_iter().map(GeneIndex::new).collect();
    let prev_index: Vec<GeneIndex> = prev.species.iter().map(|s| GeneIndex::new(&s.representative)).collect();

    // Distances to the carried-over representatives dominate the cost and
    // do not depend on assignment order. Species are tried in ascending id,
    // so each genome only needs them up to its first match.
    let to_prev: Vec<Vec<f64>> = pop
        .par_iter()
        .zip(&index)
        .map(|(g, gi)| {
            let mut ds = Vec::with_capacity(prev.species.len());
            for (s, si) in prev.species.iter().zip(&prev_index) {
                let d = distance_indexed(g, gi, &s.representative, si, &cfg.distance);
                ds.push(d);
                if d < threshold {
                    break;
                }
            }
            ds
        })
        .collect();

    let mut species: Vec<Species> = prev.species.iter().map(|s| Species { members: Vec::new(), ..s.clone() }).collect();
    let carried = species.len();
    let mut next_id = prev.next_id;
    // Founders of species created this generation, by population index.
    let mut founders: Vec<usize> = Vec::new();

    for (i, g) in pop.iter().enumerate() {
        if let Some(s) = to_prev[i].iter().position(|&d| d < threshold) {
            species[s].members.push(i);
            continue;
        }
        let mut dists = to_prev[i].clone();
        for &f in &founders {
            dists.push(distance_indexed(g, &index[i], &pop[f], &index[f], &cfg.distance));
        }
        if let Some(s) = dists.iter().position(|&d| d < threshold) {
            species[s].members.push(i);
        } else if species.len() < cfg.max_species {
            species.push(Species {
                id: next_id,
                representative: g.clone(),
                members: vec![i],
                best_fitness: f64::NEG_INFINITY,
                stagnation: 0,
            });
            next_id += 1;
            founders.push(i);
        } else {
            let s = argmin(dists.iter().copied());
            species[s].members.push(i);
        }
    }

    // A member of carried species `s` either matched `s` first or saw every
    // carried representative, so its distance to the old one is known.
    for (s, sp) in species.iter_mut().enumerate().take(carried) {
        if sp.members.is_empty() {
            continue;
        }
        let best = argmin(sp.members.iter().map(|&m| to_prev[m][s]));
        sp.representative = pop[sp.members[best]].clone();
    }
    species.retain(|s| !s.members.is_empty());
    SpeciesState { species, next_id }
}

fn species_max(s: &Species, fitness: &[f64]) -> f64 {
    s.members.iter().map(|&m| fitness[m]).fold(f64::NEG_INFINITY, f64::max)
}

/// Updates improvement counters and drops species stagnant for more than
/// `max_stagnation` generations, except the `species_elitism` best by
/// current max fitness. At least one species always survives.
pub fn update_stagnation(s: &SpeciesState, fitness: &[f64], cfg: &NeatConfig) -> SpeciesState {
    let mut species = s.species.clone();
    let mut current = Vec::with_capacity(species.len());
    for sp in &mut species {
        let m = species_max(sp, fitness);
        if m > sp.best_fitness {
            sp.best_fitness = m;
            sp.stagnation = 0;
        } else {
            sp.stagnation += 1;
        }
        current.push(m);
    }
    let mut ranked: Vec<usize> = (0..species.len()).collect();
    ranked.sort_by(|&a, &b| current[b].total_cmp(&current[a]).then(species[a].id.cmp(&species[b].id)));
    let protect = cfg.species_elitism.max(1);
    let mut keep = vec![false; species.len()];
    for (rank, &i) in ranked.iter().enumerate() {
        keep[i] = rank < protect || species[i].stagnation <= cfg.max_stagnation;
    }
    if !keep.iter().any(|&k| k) {
        if let Some(&i) = ranked.first() {
            keep[i] = true;
        }
    }
    let species = species.into_iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect();
    SpeciesState { species, next_id: s.next_id }
}

/// Population ranks mapped onto [0, 1]; tied values share their average rank.
pub fn rank_normalize(fitness: &[f64]) -> Vec<f64> {
    let n = fitness.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && fitness[order[j + 1]] == fitness[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg / (n - 1) as f64;
        }
        i = j + 1;
    }
    ranks
}

/// Moves `old` toward `target` by at most `round(rate * old)`.
pub fn clamp_spawn(old: usize, target: f64, rate: f64) -> f64 {
    let max_change = (rate * old as f64).round();
    let old = old as f64;
    old + (target - old).clamp(-max_change, max_change)
}

/// Offspring count per species (same order as `s.species`), summing to
/// `pop_size` exactly.
pub fn compute_spawn_counts(s: &SpeciesState, fitness: &[f64], cfg: &NeatConfig) -> Vec<usize> {
    let n = s.species.len();
    if n == 0 {
        return Vec::new();
    }
    let pop = cfg.pop_size;
    let ranks = rank_normalize(fitness);
    let means: Vec<f64> = s
        .species
        .iter()
        .map(|sp| sp.members.iter().map(|&m| ranks[m]).sum::<f64>() / sp.members.len().max(1) as f64)
        .collect();
    let total: f64 = means.iter().sum();
    let targets: Vec<f64> = if total > 0.0 {
        means.iter().map(|m| pop as f64 * m / total).collect()
    } else {
        vec![pop as f64 / n as f64; n]
    };

    let moved: Vec<f64> = s
        .species
        .iter()
        .zip(&targets)
        .map(|(sp, &t)| clamp_spawn(sp.members.len(), t, cfg.spawn_number_change_rate))
        .collect();
    let moved_total: f64 = moved.iter().sum();
    let scaled: Vec<f64> = if moved_total > 0.0 {
        moved.iter().map(|m| m * pop as f64 / moved_total).collect()
    } else {
        vec![pop as f64 / n as f64; n]
    };

    // Largest remainder; ties go to the earlier species.
    let mut counts: Vec<usize> = scaled.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..n).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().cycle().take(pop.saturating_sub(assigned)) {
        counts[i] += 1;
    }

    // Minimum of genome_elitism slots, taken from the largest species.
    let floor = cfg.genome_elitism;
    loop {
        let Some(needy) = (0..n).find(|&i| counts[i] < floor) else {
            break;
        };
        let donor = (0..n).filter(|&i| counts[i] > floor).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)));
        let Some(donor) = donor else {
            break;
        };
        counts[donor] -= 1;
        counts[needy] += 1;
    }
    counts
}
