use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct AuditEntry {
    pub checks: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

impl AuditEntry {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Named invariant checks accumulated over a run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AuditReport {
    pub entries: BTreeMap<String, AuditEntry>,
}

pub const TUPLE_REPLAY: &str = "tuple_verification";
pub const CERT_SOUNDNESS: &str = "certificate_soundness";
pub const LEDGER_RECOUNT: &str = "ledger_recount";
pub const AT_MOST_ONCE: &str = "make_robust_at_most_once";
pub const EPOCH_ENTRY: &str = "epoch_entry_certified";
pub const PHASE_INVARIANT: &str = "phase_tracker_bound";
pub const COST_CEILING: &str = "cost_ceiling";
pub const CENTER_COUNT: &str = "center_count";

impl AuditReport {
    /// Registers the standard checks so they are reported even when vacuous.
    pub fn with_standard_checks() -> Self {
        let mut r = Self::default();
        for name in [
            TUPLE_REPLAY,
            CERT_SOUNDNESS,
            LEDGER_RECOUNT,
            AT_MOST_ONCE,
            EPOCH_ENTRY,
            PHASE_INVARIANT,
            COST_CEILING,
            CENTER_COUNT,
        ] {
            r.entries.insert(name.to_string(), AuditEntry::default());
        }
        r
    }

    pub fn check(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        let e = self.entries.entry(name.to_string()).or_default();
        e.checks += 1;
        if !ok {
            e.violations += 1;
            if e.first_violation.is_none() {
                e.first_violation = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.entries.values().all(AuditEntry::passed)
    }

    pub fn failures(&self) -> Vec<(&str, &AuditEntry)> {
        self.entries.iter().filter(|(_, e)| !e.passed()).map(|(k, e)| (k.as_str(), e)).collect()
    }
}
