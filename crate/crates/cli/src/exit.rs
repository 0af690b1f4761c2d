//! Process exit codes by error category.
//!
//! | code | category                                              |
//! |------|-------------------------------------------------------|
//! | 0    | success                                               |
//! | 1    | other failure                                         |
//! | 2    | bad command line (reported by the argument parser)    |
//! | 3    | invalid formula, trace or pattern                     |
//! | 4    | file missing, unreadable or malformed                 |
//! | 5    | invalid configuration                                 |
//! | 6    | dataset content rejected                              |

use std::process::ExitCode;

pub const OTHER: u8 = 1;
pub const INPUT: u8 = 3;
pub const FILE: u8 = 4;
pub const CONFIG: u8 = 5;
pub const DATA: u8 = 6;

fn core_code(e: &tilr_core::Error) -> u8 {
    match e {
        tilr_core::Error::InvalidConfig(_) => CONFIG,
        _ => INPUT,
    }
}

fn category(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(e) = cause.downcast_ref::<tilr_learn::Error>() {
            return match e {
                tilr_learn::Error::Io { .. } | tilr_learn::Error::Format { .. } => FILE,
                tilr_learn::Error::Record { .. } | tilr_learn::Error::Data(_) => DATA,
                tilr_learn::Error::Config(_) | tilr_learn::Error::Shape(_) => CONFIG,
                tilr_learn::Error::Logic(inner) => core_code(inner),
            };
        }
        if let Some(e) = cause.downcast_ref::<tilr_core::Error>() {
            return core_code(e);
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return FILE;
        }
    }
    OTHER
}

pub fn code_for(e: &anyhow::Error) -> ExitCode {
    ExitCode::from(category(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn categories_follow_the_cause_chain() {
        let syntax: anyhow::Error = tilr_core::Error::UnknownAtom("q".into()).into();
        assert_eq!(category(&syntax), INPUT);
        let wrapped = Err::<(), _>(tilr_learn::Error::Data("x".into()))
            .context("while loading")
            .unwrap_err();
        assert_eq!(category(&wrapped), DATA);
        let io: anyhow::Error = std::io::Error::other("disk").into();
        assert_eq!(category(&io), FILE);
        assert_eq!(category(&anyhow::anyhow!("plain")), OTHER);
        let cfg: anyhow::Error =
            tilr_learn::Error::Logic(tilr_core::Error::InvalidConfig("t".into())).into();
        assert_eq!(category(&cfg), CONFIG);
    }
}
