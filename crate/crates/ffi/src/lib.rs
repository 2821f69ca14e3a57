//! C interface to the presume reasoner.
//!
//! Engines and dialog sessions are opaque handles. Every function returns a
//! [`PresumeStatus`]; on failure a description is available from
//! [`presume_last_error_message`] on the same thread. Strings handed out by
//! the library are JSON and must be released with [`presume_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use serde::Deserialize;

use presume::dialog::{DialogError, DialogSession, UserReply};
use presume::engine::{Engine, EngineError, EngineOptions};
use presume::knowledge::KnowledgeError;
use presume::parser::{parse_command_str, ParseError};
use presume::prover::{ProverError, SearchConfig, TemplateColor};
use presume::service::ReplyBody;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresumeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Bad configuration, template name or JSON.
    InvalidArgument = 3,
    /// The command or explanation could not be parsed.
    ParseError = 4,
    BackendUnavailable = 5,
    RuntimeError = 6,
    SessionClosed = 7,
    /// The reply does not fit the pending prompt.
    InvalidReply = 8,
    Panic = 9,
}

pub struct PresumeEngine {
    engine: Arc<Engine>,
}

pub struct PresumeSession {
    engine: Arc<Engine>,
    session: DialogSession,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PresumeStatus, String);

impl Failure {
    fn new(status: PresumeStatus, message: impl ToString) -> Self {
        Self(status, message.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let status = if e.is_backend_unavailable() {
            PresumeStatus::BackendUnavailable
        } else {
            match &e {
                EngineError::Parse(_) => PresumeStatus::ParseError,
                EngineError::Prover(ProverError::UnsupportedTemplate(_) | ProverError::InvalidConfig(_)) => {
                    PresumeStatus::InvalidArgument
                }
                _ => PresumeStatus::RuntimeError,
            }
        };
        Failure::new(status, e)
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::new(PresumeStatus::ParseError, e)
    }
}

impl From<DialogError> for Failure {
    fn from(e: DialogError) -> Self {
        let status = match &e {
            DialogError::SessionAlreadyClosed => PresumeStatus::SessionClosed,
            DialogError::ReplyKindMismatch { .. } | DialogError::ChoiceOutOfRange { .. } => PresumeStatus::InvalidReply,
            DialogError::Prover(ProverError::Knowledge(KnowledgeError::BackendUnavailable { .. })) => {
                PresumeStatus::BackendUnavailable
            }
            _ => PresumeStatus::RuntimeError,
        };
        Failure::new(status, e)
    }
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

/// Runs `body`, recording any failure or panic for the calling thread.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PresumeStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PresumeStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PresumeStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::new(PresumeStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(PresumeStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

fn check_out<T>(out: *mut T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure::new(PresumeStatus::NullArgument, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<*mut c_char, Failure> {
    let text = serde_json::to_string(value).map_err(|e| Failure::new(PresumeStatus::RuntimeError, e))?;
    Ok(CString::new(text).expect("JSON has no NUL bytes").into_raw())
}

fn template(name: &str) -> Result<TemplateColor, Failure> {
    name.parse()
        .map_err(|e: ProverError| Failure::new(PresumeStatus::InvalidArgument, e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Options {
    kb: Option<String>,
    embeddings: Option<PathBuf>,
    templates: Option<PathBuf>,
    relations: Option<PathBuf>,
    rules: Option<PathBuf>,
    #[serde(default)]
    search: SearchConfig,
}

/// Creates an engine. `options_json` may be null for the bundled desk data,
/// or an object with any of `kb`, `embeddings`, `templates`, `relations`,
/// `rules` and `search`.
///
/// # Safety
/// `options_json` is null or a valid NUL-terminated string; `out` is a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn presume_engine_new(
    options_json: *const c_char,
    out: *mut *mut PresumeEngine,
) -> PresumeStatus {
    guard(|| {
        check_out(out, "out")?;
        let mut options = EngineOptions::default();
        if !options_json.is_null() {
            let parsed: Options = serde_json::from_str(read_str(options_json, "options_json")?)
                .map_err(|e| Failure::new(PresumeStatus::InvalidArgument, e))?;
            if let Some(kb) = parsed.kb {
                options.kb = kb;
            }
            if let Some(e) = parsed.embeddings {
                options.embeddings = e;
            }
            options.templates = parsed.templates;
            options.relations = parsed.relations;
            options.rules = parsed.rules;
            options.search = parsed.search;
        }
        let engine = Engine::open(&options).map_err(|e| match Failure::from(e) {
            Failure(PresumeStatus::RuntimeError, m) => Failure(PresumeStatus::InvalidArgument, m),
            other => other,
        })?;
        *out = Box::into_raw(Box::new(PresumeEngine {
            engine: Arc::new(engine),
        }));
        Ok(())
    })
}

/// Releases an engine. Sessions opened from it stay usable.
///
/// # Safety
/// `engine` is null or came from [`presume_engine_new`] and is not used again.
#[no_mangle]
pub unsafe extern "C" fn presume_engine_free(engine: *mut PresumeEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Proves `command` with the `template` color and writes the proofs as JSON.
///
/// # Safety
/// `engine` is a live handle; string arguments are valid NUL-terminated
/// strings; `out_json` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn presume_prove(
    engine: *const PresumeEngine,
    command: *const c_char,
    template_name: *const c_char,
    out_json: *mut *mut c_char,
) -> PresumeStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure::new(PresumeStatus::NullArgument, "`engine` is null"))?;
        let color = template(read_str(template_name, "template")?)?;
        let command = parse_command_str(read_str(command, "command")?)?;
        let proofs = engine.engine.prove(&command, color)?;
        *out_json = to_json(&proofs)?;
        Ok(())
    })
}

/// Opens a dialog session and writes its first prompt as JSON.
///
/// # Safety
/// `engine` is a live handle; string arguments are valid NUL-terminated
/// strings; `out_session` and `out_prompt_json` are valid pointers.
#[no_mangle]
pub unsafe extern "C" fn presume_session_start(
    engine: *const PresumeEngine,
    command: *const c_char,
    template_name: *const c_char,
    out_session: *mut *mut PresumeSession,
    out_prompt_json: *mut *mut c_char,
) -> PresumeStatus {
    guard(|| {
        check_out(out_session, "out_session")?;
        check_out(out_prompt_json, "out_prompt_json")?;
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure::new(PresumeStatus::NullArgument, "`engine` is null"))?;
        let color = template(read_str(template_name, "template")?)?;
        let command = parse_command_str(read_str(command, "command")?)?;
        let (session, prompt) = DialogSession::start(&engine.engine, command, color)?;
        *out_prompt_json = to_json(&prompt)?;
        *out_session = Box::into_raw(Box::new(PresumeSession {
            engine: engine.engine.clone(),
            session,
        }));
        Ok(())
    })
}

/// Answers the pending prompt. `reply_json` is `{"choice": n}` (optionally
/// with `"explanation"`), `{"yesno": b}` or `{"text": "..."}`. The result is
/// `{"prompt": ...}` or `{"outcome": ...}`.
///
/// # Safety
/// `session` is a live handle; `reply_json` is a valid NUL-terminated
/// string; `out_json` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn presume_session_reply(
    session: *mut PresumeSession,
    reply_json: *const c_char,
    out_json: *mut *mut c_char,
) -> PresumeStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let handle = session
            .as_mut()
            .ok_or_else(|| Failure::new(PresumeStatus::NullArgument, "`session` is null"))?;
        let body: ReplyBody = serde_json::from_str(read_str(reply_json, "reply_json")?)
            .map_err(|e| Failure::new(PresumeStatus::InvalidReply, e))?;
        let reply = UserReply::try_from(body).map_err(|e| Failure::new(PresumeStatus::InvalidReply, e))?;
        let step = handle.session.step(&handle.engine, reply)?;
        *out_json = to_json(&step)?;
        Ok(())
    })
}

/// Writes the session's transcript, candidates and outcome as JSON.
///
/// # Safety
/// `session` is a live handle; `out_json` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn presume_session_view(
    session: *const PresumeSession,
    out_json: *mut *mut c_char,
) -> PresumeStatus {
    guard(|| {
        check_out(out_json, "out_json")?;
        let handle = session
            .as_ref()
            .ok_or_else(|| Failure::new(PresumeStatus::NullArgument, "`session` is null"))?;
        *out_json = to_json(&handle.session)?;
        Ok(())
    })
}

/// # Safety
/// `session` is null or came from [`presume_session_start`] and is not used
/// again.
#[no_mangle]
pub unsafe extern "C" fn presume_session_free(session: *mut PresumeSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// # Safety
/// `s` is null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn presume_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn presume_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
