use thiserror::Error;

use super::ast::Span;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HdlError {
    #[error("syntax error: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("{rule}: {message}")]
    Validation {
        rule: ValidationRule,
        span: Span,
        message: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValidationRule {
    UndeclaredIdentifier,
    DuplicateDeclaration,
    MultipleDrivers,
    WidthOutOfRange,
    ZeroWidthConstant,
    BadBitSelect,
    AssignKind,
    AssignmentStyle,
    DrivenInput,
    Clock,
    UnknownModule,
    PortConnection,
    DuplicateModule,
    MissingTop,
    InstantiationCycle,
    CombinationalLoop,
}

impl std::fmt::Display for ValidationRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ValidationRule::UndeclaredIdentifier => "undeclared-identifier",
            ValidationRule::DuplicateDeclaration => "duplicate-declaration",
            ValidationRule::MultipleDrivers => "multiple-drivers",
            ValidationRule::WidthOutOfRange => "width-out-of-range",
            ValidationRule::ZeroWidthConstant => "zero-width-constant",
            ValidationRule::BadBitSelect => "bad-bit-select",
            ValidationRule::AssignKind => "assign-kind",
            ValidationRule::AssignmentStyle => "assignment-style",
            ValidationRule::DrivenInput => "driven-input",
            ValidationRule::Clock => "clock",
            ValidationRule::UnknownModule => "unknown-module",
            ValidationRule::PortConnection => "port-connection",
            ValidationRule::DuplicateModule => "duplicate-module",
            ValidationRule::MissingTop => "missing-top",
            ValidationRule::InstantiationCycle => "instantiation-cycle",
            ValidationRule::CombinationalLoop => "combinational-loop",
        };
        f.write_str(s)
    }
}

impl HdlError {
    pub fn syntax(position: usize, expected: impl Into<String>) -> Self {
        HdlError::Syntax {
            position,
            expected: expected.into(),
        }
    }

    pub fn validation(rule: ValidationRule, span: Span, message: impl Into<String>) -> Self {
        HdlError::Validation {
            rule,
            span,
            message: message.into(),
        }
    }

    pub fn offset(&self) -> usize {
        match self {
            HdlError::Syntax { position, .. } => *position,
            HdlError::Validation { span, .. } => span.start,
        }
    }

    /// `file:line:col: message`, with 1-based line and column.
    pub fn render(&self, file: &str, source: &str) -> String {
        let (line, col) = line_col(source, self.offset());
        format!("{file}:{line}:{col}: {self}")
    }
}

pub fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let col = offset
        - before
            .iter()
            .rposition(|&b| b == b'\n')
            .map_or(0, |p| p + 1)
        + 1;
    (line, col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_line_and_column() {
        let src = "module m;\n  assign x = ;\nendmodule\n";
        let err = HdlError::syntax(src.find("= ;").unwrap() + 2, "expression");
        assert_eq!(
            err.render("a.v", src),
            "a.v:2:14: syntax error: expected expression"
        );
    }
}
