//! C ABI over the `proleg` crate.
//!
//! Programs and fact bases are opaque handles owned by the caller and
//! released with their `_free` function. Strings returned through `char **`
//! out-parameters are heap-allocated and must be released with
//! [`proleg_string_free`]. Every fallible function returns a
//! [`ProlegStatus`]; on failure a message is available from
//! [`proleg_last_error`] on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use proleg::convert::convert_source;
use proleg::lint::{findings_to_json, lint, LintConfig};
use proleg::parser::ErrorList;
use proleg::trace::{parse_json, render_json_document};
use proleg::{parse_atom, parse_facts, parse_program, render_dot, render_text, serialize, EngineConfig, FactBase, Program};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProlegStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    EngineError = 4,
    ConvertError = 5,
    ConfigError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProlegOutcome {
    /// `o`: the query holds.
    Success = 0,
    /// `x`: the query does not hold.
    Failure = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProlegTraceFormat {
    Json = 0,
    Dot = 1,
    Text = 2,
}

/// Evaluation limits; obtain defaults from [`proleg_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProlegConfig {
    pub max_depth: usize,
    pub max_steps: usize,
    pub loop_check: bool,
}

impl From<ProlegConfig> for EngineConfig {
    fn from(c: ProlegConfig) -> Self {
        EngineConfig { max_depth: c.max_depth, max_steps: c.max_steps, loop_check: c.loop_check }
    }
}

/// A parsed rule program.
pub struct ProlegProgram(Program);

/// A ground fact base.
pub struct ProlegFacts(FactBase);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(ProlegStatus);

fn fail(status: ProlegStatus, message: impl Into<String>) -> Fail {
    set_error(message);
    Fail(status)
}

/// Runs `body`, translating early returns and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> ProlegStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ProlegStatus::Ok,
        Ok(Err(Fail(status))) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            ProlegStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for reads.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(ProlegStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(ProlegStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NULs removed").into_raw()
}

/// Checked before anything is allocated, so a null out-pointer cannot leak.
fn require_out<T>(out: *mut T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(fail(ProlegStatus::NullArgument, format!("{what} is null")));
    }
    Ok(())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(ProlegStatus::NullArgument, format!("{what} is null")))
}

/// The last error message recorded on this thread, or null. The pointer
/// stays valid until the next `proleg_*` call on the same thread.
#[no_mangle]
pub extern "C" fn proleg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn proleg_config_default() -> ProlegConfig {
    let d = EngineConfig::default();
    ProlegConfig { max_depth: d.max_depth, max_steps: d.max_steps, loop_check: d.loop_check }
}

/// Parses PROLEG source into a new program handle.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn proleg_program_parse(source: *const c_char, out: *mut *mut ProlegProgram) -> ProlegStatus {
    guard(|| {
        let text = read_str(source, "source")?;
        require_out(out, "out")?;
        let program = parse_program(text).map_err(|e| fail(ProlegStatus::ParseError, ErrorList(&e).to_string()))?;
        out.write(Box::into_raw(Box::new(ProlegProgram(program))));
        Ok(())
    })
}

/// # Safety
/// `program` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn proleg_program_free(program: *mut ProlegProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// # Safety
/// `program` is a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn proleg_program_rule_count(program: *const ProlegProgram) -> usize {
    program.as_ref().map_or(0, |p| p.0.rules.len())
}

/// # Safety
/// `program` is a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn proleg_program_exception_count(program: *const ProlegProgram) -> usize {
    program.as_ref().map_or(0, |p| p.0.exceptions.len())
}

/// Canonical PROLEG text of the program.
///
/// # Safety
/// `program` is a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn proleg_program_serialize(program: *const ProlegProgram, out: *mut *mut c_char) -> ProlegStatus {
    guard(|| {
        let p = deref(program, "program")?;
        require_out(out, "out")?;
        out.write(to_c_string(serialize(&p.0)));
        Ok(())
    })
}

/// Parses a `.facts` document of ground atoms.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn proleg_facts_parse(source: *const c_char, out: *mut *mut ProlegFacts) -> ProlegStatus {
    guard(|| {
        let text = read_str(source, "source")?;
        require_out(out, "out")?;
        let facts = parse_facts(text).map_err(|e| fail(ProlegStatus::ParseError, ErrorList(&e).to_string()))?;
        out.write(Box::into_raw(Box::new(ProlegFacts(facts))));
        Ok(())
    })
}

/// # Safety
/// `facts` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn proleg_facts_free(facts: *mut ProlegFacts) {
    if !facts.is_null() {
        drop(Box::from_raw(facts));
    }
}

/// Proves `query` and reports the outcome. When `trace_json` is non-null it
/// receives the reasoning tree as a versioned JSON document. `config` may be
/// null for the defaults.
///
/// # Safety
/// Handles must be live; `query` NUL-terminated; `outcome` valid for writes;
/// `config` and `trace_json` null or valid.
#[no_mangle]
pub unsafe extern "C" fn proleg_solve(
    program: *const ProlegProgram,
    facts: *const ProlegFacts,
    query: *const c_char,
    config: *const ProlegConfig,
    outcome: *mut ProlegOutcome,
    trace_json: *mut *mut c_char,
) -> ProlegStatus {
    guard(|| {
        let p = deref(program, "program")?;
        let f = deref(facts, "facts")?;
        let q = read_str(query, "query")?;
        require_out(outcome, "outcome")?;
        let goal = parse_atom(q).map_err(|e| fail(ProlegStatus::ParseError, ErrorList(&e).to_string()))?;
        let cfg: EngineConfig = config.as_ref().map_or_else(EngineConfig::default, |c| (*c).into());
        let (result, trace) =
            proleg::solve(&p.0, &f.0, &goal, &cfg).map_err(|e| fail(ProlegStatus::EngineError, e.to_string()))?;
        outcome.write(if result.is_success() { ProlegOutcome::Success } else { ProlegOutcome::Failure });
        if !trace_json.is_null() {
            trace_json.write(to_c_string(render_json_document(&trace)));
        }
        Ok(())
    })
}

/// Re-renders a JSON trace from [`proleg_solve`] as JSON, DOT or indented text.
///
/// # Safety
/// `trace_json` NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn proleg_trace_render(
    trace_json: *const c_char,
    format: ProlegTraceFormat,
    out: *mut *mut c_char,
) -> ProlegStatus {
    guard(|| {
        let text = read_str(trace_json, "trace_json")?;
        require_out(out, "out")?;
        let trace = parse_json(text).map_err(|e| fail(ProlegStatus::ParseError, e.to_string()))?;
        let rendered = match format {
            ProlegTraceFormat::Json => render_json_document(&trace),
            ProlegTraceFormat::Dot => render_dot(&trace),
            ProlegTraceFormat::Text => render_text(&trace),
        };
        out.write(to_c_string(rendered));
        Ok(())
    })
}

/// Lint findings as a JSON array. `config_json` may be null for defaults.
///
/// # Safety
/// `program` live; `config_json` null or NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn proleg_lint_json(
    program: *const ProlegProgram,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> ProlegStatus {
    guard(|| {
        let p = deref(program, "program")?;
        let cfg = if config_json.is_null() {
            LintConfig::default()
        } else {
            LintConfig::from_json(read_str(config_json, "config_json")?)
                .map_err(|e| fail(ProlegStatus::ConfigError, e))?
        };
        require_out(out, "out")?;
        out.write(to_c_string(findings_to_json(&lint(&p.0, &cfg))));
        Ok(())
    })
}

/// Converts Prolog-subset source into a new program handle. When `report`
/// is non-null it receives the conversion summary.
///
/// # Safety
/// `prolog` NUL-terminated; `out` valid for writes; `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn proleg_convert(
    prolog: *const c_char,
    out: *mut *mut ProlegProgram,
    report: *mut *mut c_char,
) -> ProlegStatus {
    guard(|| {
        let text = read_str(prolog, "prolog")?;
        require_out(out, "out")?;
        let (program, summary) = convert_source(text).map_err(|e| fail(ProlegStatus::ConvertError, e.to_string()))?;
        if !report.is_null() {
            report.write(to_c_string(summary.to_string()));
        }
        out.write(Box::into_raw(Box::new(ProlegProgram(program))));
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn proleg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
