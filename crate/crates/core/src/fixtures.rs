//! Bundled `.jkb` knowledge bases from the two case studies.
//!
//! Fragments (`*_V2`) only redefine a datum and do not load on their own;
//! the `*_HIERARCHICAL` and `LINK_FAULT_LCK` sources are complete knowledge
//! bases assembled from them.

/// QoS policy activation from an administrator command and a device signal.
pub const QOS_POLICY: &str = include_str!("../fixtures/qos_policy.jkb");
/// The administrator command split into two commands, as a datum.
pub const ADMIN_COMMAND: &str = include_str!("../fixtures/admin_command.jkb");
/// QoS policy rules using the administrator-command datum.
pub const QOS_POLICY_V2: &str = include_str!("../fixtures/qos_policy_v2.jkb");
/// Complete hierarchical QoS policy knowledge base.
pub const QOS_POLICY_HIERARCHICAL: &str = include_str!("../fixtures/qos_policy_hierarchical.jkb");

/// Obligation policy "Adjust QoS Policy".
pub const ADJUST_QOS: &str = include_str!("../fixtures/adjust_qos.jkb");
/// Router R1 low-load datum built from CPU and memory load.
pub const R1_LOAD: &str = include_str!("../fixtures/r1_load.jkb");
/// "Adjust QoS Policy" rules using the R1 load datum.
pub const ADJUST_QOS_V2: &str = include_str!("../fixtures/adjust_qos_v2.jkb");
/// Complete hierarchical "Adjust QoS Policy" knowledge base.
pub const ADJUST_QOS_HIERARCHICAL: &str = include_str!("../fixtures/adjust_qos_hierarchical.jkb");

/// Link fault detection on an access link.
pub const LINK_FAULT: &str = include_str!("../fixtures/link_fault.jkb");
/// Link fault rules with the diagnostics-off justification.
pub const LINK_FAULT_V2: &str = include_str!("../fixtures/link_fault_v2.jkb");
/// Complete link-fault knowledge base including `dev_dia_off`.
pub const LINK_FAULT_LCK: &str = include_str!("../fixtures/link_fault_lck.jkb");

/// Every bundled source as `(file name, text)`.
pub const ALL: &[(&str, &str)] = &[
    ("qos_policy.jkb", QOS_POLICY),
    ("admin_command.jkb", ADMIN_COMMAND),
    ("qos_policy_v2.jkb", QOS_POLICY_V2),
    ("qos_policy_hierarchical.jkb", QOS_POLICY_HIERARCHICAL),
    ("adjust_qos.jkb", ADJUST_QOS),
    ("r1_load.jkb", R1_LOAD),
    ("adjust_qos_v2.jkb", ADJUST_QOS_V2),
    ("adjust_qos_hierarchical.jkb", ADJUST_QOS_HIERARCHICAL),
    ("link_fault.jkb", LINK_FAULT),
    ("link_fault_v2.jkb", LINK_FAULT_V2),
    ("link_fault_lck.jkb", LINK_FAULT_LCK),
];
