//! The synthesizable Verilog subset: syntax tree, parser, printer, validator
//! and random seed generator.

pub mod ast;
pub mod elab;
pub mod error;
pub mod gen;
mod lexer;
pub(crate) mod parser;
pub mod printer;
pub mod validate;

use serde::{Deserialize, Serialize};

pub use ast::*;
pub use error::{HdlError, ValidationRule};
pub use gen::{gen_seed, SizeProfile};
pub use validate::{expr_width, validate};

/// Parses and validates a single-file design. The top is the first module
/// not instantiated by any other.
pub fn parse(source: &str) -> Result<Design, HdlError> {
    let modules = parser::parse_modules(source)?;
    build(modules)
}

fn build(modules: Vec<AstModule>) -> Result<Design, HdlError> {
    let top = validate::infer_top(&modules).ok_or_else(|| {
        HdlError::validation(ValidationRule::MissingTop, Span::default(), "no top module")
    })?;
    let d = Design { modules, top };
    validate(&d)?;
    Ok(d)
}

pub fn print(d: &Design) -> String {
    printer::print(d)
}

/// One source file of a multi-file design.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

pub const MAIN_FILE: &str = "main.v";

/// Prints the main file first, then one file per unit in order of first
/// appearance.
pub fn print_files(d: &Design) -> Vec<SourceFile> {
    let mut units: Vec<Option<&str>> = vec![None];
    for m in &d.modules {
        if !units.contains(&m.unit.as_deref()) {
            units.push(m.unit.as_deref());
        }
    }
    units
        .into_iter()
        .map(|unit| {
            let mut text = String::new();
            for m in d.modules.iter().filter(|m| m.unit.as_deref() == unit) {
                if !text.is_empty() {
                    text.push('\n');
                }
                printer::print_module(m, &mut text);
            }
            SourceFile {
                path: unit.unwrap_or(MAIN_FILE).to_string(),
                text,
            }
        })
        .collect()
}

/// Parses a multi-file design. The first file is the main file; modules from
/// the others are tagged with their file path as unit.
pub fn parse_files(files: &[SourceFile]) -> Result<Design, (String, HdlError)> {
    let mut modules = Vec::new();
    for (i, f) in files.iter().enumerate() {
        let mut ms = parser::parse_modules(&f.text).map_err(|e| (f.path.clone(), e))?;
        if i > 0 {
            for m in &mut ms {
                m.unit = Some(f.path.clone());
            }
        }
        modules.extend(ms);
    }
    let main = files.first().map(|f| f.path.clone()).unwrap_or_default();
    build(modules).map_err(|e| (main, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_design_parses() {
        let d = parse("module m(input a, output b); assign b = a; endmodule").unwrap();
        assert_eq!(d.modules.len(), 1);
        assert_eq!(d.top, "m");
        assert_eq!(d.modules[0].items.len(), 1);
    }

    #[test]
    fn shift_assign_ast() {
        let d =
            parse("module m(input [3:0] a, output [3:0] b); assign b = a >> 1; endmodule").unwrap();
        let Item::Assign(a) = &d.modules[0].items[0] else {
            panic!()
        };
        assert_eq!(a.lhs, "b");
        assert_eq!(
            a.rhs,
            Expr::binary(BinaryOp::Shr, Expr::reference("a"), Expr::constant(32, 1))
        );
    }

    #[test]
    fn round_trip_with_hierarchy() {
        let src = "module t(input clk, input [1:0] a, output [1:0] y);\n\
                   wire [1:0] w;\n\
                   s u0(.clk(clk), .a(a), .q(w));\n\
                   assign y = w;\n\
                   endmodule\n\
                   module s(input clk, input [1:0] a, output reg [1:0] q);\n\
                   always @(posedge clk) q <= a + 2'd1;\n\
                   endmodule\n";
        let d = parse(src).unwrap();
        assert_eq!(d.top, "t");
        let again = parse(&print(&d)).unwrap();
        assert_eq!(d, again);
        assert_eq!(print(&again), print(&d));
    }

    #[test]
    fn files_round_trip() {
        let mut d = parse(
            "module t(input a, output y); s u(.a(a), .y(y)); endmodule\n\
             module s(input a, output y); assign y = ~a; endmodule",
        )
        .unwrap();
        d.modules[1].unit = Some("s.v".into());
        let files = print_files(&d);
        assert_eq!(files.len(), 2);
        assert_eq!(files[1].path, "s.v");
        assert_eq!(parse_files(&files).unwrap(), d);
    }

    #[test]
    fn diagnostics_carry_position() {
        let src = "module m(input a, output b);\n  assign b = ;\nendmodule\n";
        let err = parse(src).unwrap_err();
        assert_eq!(
            err.render("x.v", src),
            "x.v:2:14: syntax error: expected expression"
        );
    }
}
