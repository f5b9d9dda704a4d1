//! Progressive training state machine: stages, fade-in/stabilize phases,
//! alpha, and the per-stage learning-rate plan.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    FadeIn,
    Stabilize,
}

/// Full-scale defaults: 1,000,000 reals per phase, learning rate 0.0003 for
/// stages 0-1 and 0.0006 for stages 2-3, dropping to 0.0001 for the last
/// quarter of the final stabilize phase.
pub const DEFAULT_REALS_PER_PHASE: u64 = 1_000_000;
pub const DEFAULT_LR_TABLE: [f64; 4] = [0.0003, 0.0003, 0.0006, 0.0006];
pub const DEFAULT_LATE_LR: (f64, f64) = (0.0001, 0.25);

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSchedule {
    pub stage: usize,
    pub target_stage: usize,
    pub phase: Phase,
    pub reals_shown_in_phase: u64,
    pub reals_per_phase: u64,
    pub lr_table: Vec<f64>,
    /// (rate, fraction): learning rate override for the trailing `fraction`
    /// of the final stage's stabilize phase.
    pub late_lr: Option<(f64, f64)>,
    complete: bool,
}

impl TrainSchedule {
    pub fn new(
        target_stage: usize,
        reals_per_phase: u64,
        lr_table: Vec<f64>,
        late_lr: Option<(f64, f64)>,
    ) -> Self {
        assert!(reals_per_phase > 0);
        assert!(!lr_table.is_empty());
        TrainSchedule {
            stage: 0,
            target_stage,
            // stage 0 has nothing to fade from
            phase: Phase::Stabilize,
            reals_shown_in_phase: 0,
            reals_per_phase,
            lr_table,
            late_lr,
            complete: false,
        }
    }

    pub fn full_scale(target_stage: usize) -> Self {
        Self::new(
            target_stage,
            DEFAULT_REALS_PER_PHASE,
            DEFAULT_LR_TABLE.to_vec(),
            Some(DEFAULT_LATE_LR),
        )
    }

    pub fn alpha(&self) -> f64 {
        match self.phase {
            Phase::FadeIn => {
                (self.reals_shown_in_phase as f64 / self.reals_per_phase as f64).min(1.0)
            }
            Phase::Stabilize => 1.0,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        if let Some((rate, fraction)) = self.late_lr {
            if self.stage == self.target_stage
                && self.phase == Phase::Stabilize
                && self.reals_shown_in_phase as f64
                    >= (1.0 - fraction) * self.reals_per_phase as f64
            {
                return rate;
            }
        }
        let idx = self.stage.min(self.lr_table.len() - 1);
        self.lr_table[idx]
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// True when the phase just ended (a natural checkpoint boundary).
    pub fn advance(&mut self, reals: u64) -> bool {
        if self.complete {
            return false;
        }
        self.reals_shown_in_phase += reals;
        if self.reals_shown_in_phase < self.reals_per_phase {
            return false;
        }
        self.reals_shown_in_phase = 0;
        match self.phase {
            Phase::FadeIn => self.phase = Phase::Stabilize,
            Phase::Stabilize => {
                if self.stage >= self.target_stage {
                    self.complete = true;
                } else {
                    self.stage += 1;
                    self.phase = Phase::FadeIn;
                }
            }
        }
        true
    }

    pub fn resolution(&self) -> usize {
        4 << self.stage
    }

    /// Restores mid-run state from a checkpoint.
    pub fn restore(&mut self, stage: usize, phase: Phase, reals_shown: u64, complete: bool) {
        self.stage = stage;
        self.phase = phase;
        self.reals_shown_in_phase = reals_shown;
        self.complete = complete;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_zero_starts_in_stabilize() {
        let s = TrainSchedule::new(2, 64, vec![3e-4], None);
        assert_eq!(s.phase, Phase::Stabilize);
        assert_eq!(s.alpha(), 1.0);
    }

    #[test]
    fn phase_order_and_counter_reset() {
        let mut s = TrainSchedule::new(1, 8, vec![3e-4], None);
        for _ in 0..2 {
            assert!(!s.advance(4) || s.reals_shown_in_phase == 0);
        }
        assert_eq!((s.stage, s.phase), (1, Phase::FadeIn));
        s.advance(4);
        assert_eq!(s.reals_shown_in_phase, 4);
        s.advance(4);
        assert_eq!((s.stage, s.phase), (1, Phase::Stabilize));
        s.advance(8);
        assert!(s.is_complete());
    }

    #[test]
    fn alpha_linear_in_fade() {
        let mut s = TrainSchedule::new(1, 64, vec![3e-4], None);
        while !(s.stage == 1 && s.phase == Phase::FadeIn) {
            s.advance(4);
        }
        let mut prev = -1.0;
        for i in 0..16 {
            let a = s.alpha();
            assert!((a - i as f64 / 16.0).abs() < 1e-12);
            assert!(a >= prev);
            prev = a;
            s.advance(4);
        }
        assert_eq!(s.alpha(), 1.0);
    }

    #[test]
    fn full_scale_echoes_reference_values() {
        let s = TrainSchedule::full_scale(3);
        assert_eq!(s.reals_per_phase, 1_000_000);
        assert_eq!(s.lr_table, vec![0.0003, 0.0003, 0.0006, 0.0006]);
        assert_eq!(s.late_lr, Some((0.0001, 0.25)));
    }

    #[test]
    fn late_lr_covers_final_quarter() {
        let mut s = TrainSchedule::new(0, 100, vec![6e-4], Some((1e-4, 0.25)));
        assert_eq!(s.learning_rate(), 6e-4);
        s.advance(74);
        assert_eq!(s.learning_rate(), 6e-4);
        s.advance(1);
        assert_eq!(s.learning_rate(), 1e-4);
    }

    #[test]
    fn total_steps_match_closed_form() {
        let mut s = TrainSchedule::new(2, 64, vec![3e-4], None);
        let mut steps = 0u64;
        while !s.is_complete() {
            s.advance(4);
            steps += 1;
        }
        assert_eq!(steps, crate::oracle::schedule_step_count(2, 64, 4));
    }
}
