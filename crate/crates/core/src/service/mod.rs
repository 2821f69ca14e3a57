//! Operational surface: reply wire format, scripted evaluation and the
//! HTTP session API.

mod eval;
mod http;
mod reply;

pub use eval::{
    load_dataset, load_scripts, run_eval, run_eval_files, DatasetEntry, EvalError, EvalReport, EvalRow, ScriptedUser,
    FALLBACK_TEXT,
};
pub use http::{router, serve, AppState, SessionStore, SESSION_IDLE_TIMEOUT};
pub use reply::{parse_terminal_reply, ReplyBody, ReplyError};
