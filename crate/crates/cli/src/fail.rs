//! Errors reported to the user as a single `key=value` line.

use std::fmt;

#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: "config",
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: "io",
            message: message.into(),
        }
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    /// Process exit code for this kind of failure.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            "config" => 3,
            "io" => 4,
            "data" => 5,
            _ => 1,
        }
    }

    /// `error command=<cmd> kind=<kind> message="<text>"`, with quotes,
    /// backslashes and line breaks escaped.
    pub fn render(&self, command: &str) -> String {
        let mut msg = String::with_capacity(self.message.len());
        for c in self.message.chars() {
            match c {
                '"' => msg.push_str("\\\""),
                '\\' => msg.push_str("\\\\"),
                '\n' => msg.push_str("\\n"),
                '\r' => msg.push_str("\\r"),
                c => msg.push(c),
            }
        }
        format!("error command={command} kind={} message=\"{msg}\"", self.kind)
    }
}

impl From<inflab::Error> for Failure {
    fn from(e: inflab::Error) -> Self {
        use inflab::Error as E;
        let kind = match &e {
            E::Io(_) => "io",
            E::Parse { .. } => "parse",
            E::EmptySeries(_) | E::TooShort { .. } | E::Domain { .. } | E::NoOverlap(_) | E::Misaligned(_) => "data",
            E::InvalidParameter(_) | E::MomentSystem(_) => "config",
            E::Singular(_) | E::IllConditioned { .. } | E::NonFiniteObjective => "numerical",
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_one_line() {
        let f = Failure::config("bad \"x\"\nsecond line").context("estimate.ini");
        let line = f.render("estimate");
        assert_eq!(
            line,
            r#"error command=estimate kind=config message="estimate.ini: bad \"x\"\nsecond line""#
        );
        assert!(!line.contains('\n'));
        assert_eq!(f.exit_code(), 3);
    }

    #[test]
    fn core_errors_map_to_kinds() {
        let f: Failure = inflab::Error::Parse {
            line: 4,
            msg: "bad month".into(),
        }
        .into();
        assert_eq!(f.kind, "parse");
        assert!(f.message.contains("line 4"));
    }
}
