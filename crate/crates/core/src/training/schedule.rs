use crate::error::{Error, Result};

/// Triangular cyclic learning rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    lr_min: f64,
    lr_max: f64,
    cycle_length: usize,
}

impl LrSchedule {
    pub fn new(lr_min: f64, lr_max: f64, cycle_length: usize) -> Result<Self> {
        if !(lr_min > 0.0 && lr_min <= lr_max && lr_max.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rates must satisfy 0 < lr_min <= lr_max, got {lr_min} and {lr_max}"
            )));
        }
        if cycle_length < 2 {
            return Err(Error::invalid(format!(
                "cycle length must be at least 2 steps, got {cycle_length}"
            )));
        }
        Ok(LrSchedule {
            lr_min,
            lr_max,
            cycle_length,
        })
    }

    pub fn constant(lr: f64) -> Result<Self> {
        LrSchedule::new(lr, lr, 2)
    }

    pub fn lr_min(&self) -> f64 {
        self.lr_min
    }

    pub fn lr_max(&self) -> f64 {
        self.lr_max
    }

    pub fn cycle_length(&self) -> usize {
        self.cycle_length
    }
}

/// Rises linearly from `lr_min` to `lr_max` over the first half of each cycle
/// and falls back over the second half.
pub fn lr_at(schedule: &LrSchedule, step: u64) -> f64 {
    let period = schedule.cycle_length as u64;
    let phase = (step % period) as f64 / (period as f64 / 2.0);
    let height = 1.0 - (phase - 1.0).abs();
    schedule.lr_min + (schedule.lr_max - schedule.lr_min) * height
}
