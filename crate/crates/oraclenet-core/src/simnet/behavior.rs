//! Node behavior models: the honest baseline plus the scripted adversaries
//! exercised by the experiments.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeBehavior {
    Honest,
    /// Seals ground truth plus a gaussian offset of the given std.
    FalseData { offset_std: f64 },
    /// Waits the extra delay before reading the source.
    Lazy { extra_delay: f64 },
    /// Goes dark for all later tasks once its broadcast has been observed
    /// the given number of times (the attacker can only find targets by
    /// watching broadcasts).
    TargetedOffline { after_broadcasts: u32 },
    /// Copies the first ciphertext it observes instead of contacting the
    /// source.
    Freeloader,
    /// Honest mechanics under a common controller, tagged for metrics.
    SybilMember { cluster: u32 },
}

impl NodeBehavior {
    /// Behaviors that follow the honest protocol path when responding.
    pub fn honest_mechanics(&self) -> bool {
        matches!(self, NodeBehavior::Honest | NodeBehavior::SybilMember { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            NodeBehavior::Honest => "honest",
            NodeBehavior::FalseData { .. } => "false_data",
            NodeBehavior::Lazy { .. } => "lazy",
            NodeBehavior::TargetedOffline { .. } => "targeted_offline",
            NodeBehavior::Freeloader => "freeloader",
            NodeBehavior::SybilMember { .. } => "sybil",
        }
    }
}

impl fmt::Display for NodeBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
