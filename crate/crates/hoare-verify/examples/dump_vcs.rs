//! Prints every condition generated for a program, one block per
//! condition: name, origin, line, open formula, closed formula.
//!
//! Usage: dump_vcs FILE.erc

use hoare_verify::generate_vcs;
use std::collections::BTreeSet;

fn main() {
    let path = std::env::args().nth(1).expect("usage: dump_vcs FILE.erc");
    let src = std::fs::read_to_string(&path).expect("readable input");
    let mut prog = erc_lang::parse(&src, &path).expect("syntax");
    let externals: BTreeSet<String> = [String::from("f")].into();
    erc_lang::check_program(&mut prog, &externals).expect("sorts");
    match generate_vcs(&prog) {
        Ok(vcs) => {
            println!("{} conditions", vcs.len());
            for vc in vcs {
                println!();
                println!("== {} ({}, line {})", vc.name(), vc.origin.describe(), vc.line);
                println!("open:   {}", vc.formula);
                println!("closed: {}", vc.closed());
            }
        }
        Err(e) => {
            println!("error: {e}");
            std::process::exit(1);
        }
    }
}
