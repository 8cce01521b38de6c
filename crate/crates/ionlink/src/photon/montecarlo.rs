use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::{EmitterConfig, Source};
use crate::exec::{map_indexed, Exec};
use crate::rng::substream;
use crate::units::TICK_SECONDS;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventRecord {
    // Field order gives the (time, channel) sort.
    pub timestamp_ticks: u64,
    pub channel: u8,
}

impl EventRecord {
    pub fn new(channel: u8, timestamp_ticks: u64) -> Self {
        EventRecord { timestamp_ticks, channel }
    }

    pub fn seconds(&self) -> f64 {
        self.timestamp_ticks as f64 * TICK_SECONDS
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    pub events: Vec<EventRecord>,
    pub trains: u64,
    pub train_period_ticks: u64,
}

impl EventStream {
    pub fn duration(&self) -> f64 {
        (self.trains * self.train_period_ticks) as f64 * TICK_SECONDS
    }

    /// Consecutive runs of `trains_per_batch` trains (the last may be shorter).
    pub fn batches(&self, trains_per_batch: u64) -> Vec<&[EventRecord]> {
        let width = trains_per_batch.max(1) * self.train_period_ticks;
        let mut out = Vec::new();
        let mut rest = &self.events[..];
        let mut end = width;
        for _ in 0..self.trains.div_ceil(trains_per_batch.max(1)) {
            let k = rest.partition_point(|e| e.timestamp_ticks < end);
            out.push(&rest[..k]);
            rest = &rest[k..];
            end += width;
        }
        out
    }

    pub fn singles(&self) -> [u64; 2] {
        let mut s = [0; 2];
        for e in &self.events {
            s[e.channel as usize] += 1;
        }
        s
    }
}

/// Trains are spaced by twice their length so photons from different trains
/// never fall inside a ±(N+1)·t_p histogram span.
pub fn train_period_ticks(cfg: &EmitterConfig) -> u64 {
    let len = 2.0 * cfg.pulse_count_n_plus_1 as f64 * cfg.pulse_period_tp;
    (len / TICK_SECONDS).ceil() as u64
}

/// Simulated TDC stream for `trains` excitation trains.
///
/// Each train draws from its own substream keyed by the train index and the
/// trains are concatenated in order, so the stream does not depend on how
/// the work is scheduled.
pub fn montecarlo_event_stream(
    cfg: &EmitterConfig,
    source: Source,
    seed: u64,
    trains: u64,
    exec: Exec,
) -> Result<EventStream> {
    cfg.validate()?;
    let period = train_period_ticks(cfg);
    let period_s = period as f64 * TICK_SECONDS;
    let decay = Exp::new(1.0 / cfg.excited_lifetime_tau).expect("positive lifetime");
    let darks = if cfg.dark_count_rate > 0.0 {
        Some(Poisson::new(cfg.dark_count_rate * period_s).expect("positive mean"))
    } else {
        None
    };
    let p = cfg.collection_probability;
    let tp = cfg.pulse_period_tp;

    let per_train = map_indexed(exec, trains as usize, |i| {
        let mut rng = substream(seed, i as u64);
        let offset = i as u64 * period;
        let mut out = Vec::new();
        let mut emit = |rng: &mut crate::rng::ChaCha8Rng, ch: u8, k: u32| {
            if rng.random::<f64>() < p {
                let t = k as f64 * tp + decay.sample(rng);
                let tick = ((t / TICK_SECONDS) as u64).min(period - 1);
                out.push(EventRecord::new(ch, offset + tick));
            }
        };
        for k in 0..cfg.pulse_count_n_plus_1 {
            match source {
                Source::SingleEmitter => {
                    let ch = rng.random::<bool>() as u8;
                    emit(&mut rng, ch, k);
                }
                Source::IdenticalPair => {
                    // Bunched: both photons leave through the same port.
                    let ch = rng.random::<bool>() as u8;
                    emit(&mut rng, ch, k);
                    emit(&mut rng, ch, k);
                }
                Source::DistinguishablePair => {
                    let c1 = rng.random::<bool>() as u8;
                    emit(&mut rng, c1, k);
                    let c2 = rng.random::<bool>() as u8;
                    emit(&mut rng, c2, k);
                }
            }
        }
        if let Some(d) = &darks {
            for ch in 0..2u8 {
                let n = d.sample(&mut rng) as u64;
                for _ in 0..n {
                    out.push(EventRecord::new(ch, offset + rng.random_range(0..period)));
                }
            }
        }
        out.sort_unstable();
        out
    });
    let events: Vec<EventRecord> = per_train.into_iter().flatten().collect();
    debug_assert!(events.windows(2).all(|w| w[0] <= w[1]));
    Ok(EventStream { events, trains, train_period_ticks: period })
}
