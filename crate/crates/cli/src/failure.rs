use serde::Serialize;

/// A failed run: a stable code, a message and the process exit status.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub code: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl Failure {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit_code: exit_code(code),
        }
    }

    pub fn config_io(message: impl Into<String>) -> Self {
        Self::new("config-io", message)
    }

    pub fn config_parse(message: impl Into<String>) -> Self {
        Self::new("config-parse", message)
    }

    pub fn invalid_config(message: impl Into<String>) -> Self {
        Self::new("invalid-config", message)
    }

    pub fn unknown_preset(name: &str) -> Self {
        Self::new(
            "unknown-preset",
            format!("unknown preset {name:?}; known: {}", crate::config::PRESETS.join(", ")),
        )
    }

    pub fn output_io(message: impl Into<String>) -> Self {
        Self::new("output-io", message)
    }

    pub fn operator_io(message: impl Into<String>) -> Self {
        Self::new("operator-io", message)
    }

    pub fn light_cone(message: impl Into<String>) -> Self {
        Self::new("light-cone-violated", message)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<ca_lift::Error> for Failure {
    fn from(e: ca_lift::Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

/// Exit status per error code; every code has its own.
pub fn exit_code(code: &str) -> i32 {
    match code {
        "config-io" => 10,
        "config-parse" => 11,
        "invalid-config" => 12,
        "unknown-preset" => 13,
        "output-io" => 14,
        "operator-io" => 15,
        "light-cone-violated" => 16,
        "invalid-lattice" => 20,
        "invalid-modulus" => 21,
        "invalid-rule" => 22,
        "invalid-site" => 23,
        "degenerate-perturbation" => 24,
        "dimension-cap" => 25,
        "dimension-mismatch" => 26,
        "invalid-order" => 27,
        "not-unitary" => 28,
        "class-mismatch" => 29,
        "invalid-cut" => 30,
        "invalid-state" => 31,
        "invariant-violated" => 32,
        "parse" => 33,
        "usage" => 2,
        _ => 1,
    }
}
