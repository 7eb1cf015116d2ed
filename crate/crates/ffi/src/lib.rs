//! C ABI for the travisgo project model, file format, and timecodes.
//!
//! Projects are opaque `TgProject` handles created by `tg_project_new` or
//! `tg_project_parse` and released with `tg_project_free`. Every fallible
//! call returns a `TgStatus`; on failure `tg_last_error_message` describes
//! the error for the calling thread. Strings returned through out-pointers
//! are owned by the caller and must be released with `tg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use travisgo::model::{Category, ModelError, Project, Username};
use travisgo::syntax::{
    export_document, format_timecode, parse_project_file, parse_timecode, serialize_project, ExportOrder,
    SyntaxError, Timecode, TimecodeError,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    MalformedUrl = 10,
    MultilineMeta = 11,
    InvalidTag = 12,
    InvalidUsername = 13,
    UnknownCategory = 14,
    EmptyBody = 15,
    MultilineComment = 16,
    InvertedRange = 17,
    UnknownPost = 18,
    NotAuthor = 19,
    InvalidDocument = 20,
    MalformedTimecode = 30,
    OutOfRange = 31,
    SubCentisecond = 32,
    MalformedHeader = 33,
    MalformedFile = 34,
    VersionUnsupported = 35,
    Panic = 99,
}

pub const TG_CATEGORY_PICTURE: u32 = 0;
pub const TG_CATEGORY_AUDIO: u32 = 1;
pub const TG_CATEGORY_TEXT: u32 = 2;
pub const TG_CATEGORY_META: u32 = 3;

pub const TG_ORDER_FEED: u32 = 0;
pub const TG_ORDER_BY_AUTHOR: u32 = 1;

/// Pass as `end_ms` for a post without an end point.
pub const TG_NO_END: i64 = -1;

/// Opaque project handle.
pub struct TgProject {
    inner: Project,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TgStatus, String);

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let status = match e {
            ModelError::MalformedUrl(_) => TgStatus::MalformedUrl,
            ModelError::MultilineMeta => TgStatus::MultilineMeta,
            ModelError::InvalidTag(_) => TgStatus::InvalidTag,
            ModelError::InvalidUsername { .. } => TgStatus::InvalidUsername,
            ModelError::UnknownCategory(_) => TgStatus::UnknownCategory,
            ModelError::EmptyBody => TgStatus::EmptyBody,
            ModelError::MultilineComment => TgStatus::MultilineComment,
            ModelError::InvertedRange { .. } => TgStatus::InvertedRange,
            ModelError::UnknownPost(_) => TgStatus::UnknownPost,
            ModelError::NotAuthor { .. } => TgStatus::NotAuthor,
            ModelError::InvalidDocument(_) => TgStatus::InvalidDocument,
        };
        Failure(status, e.to_string())
    }
}

impl From<TimecodeError> for Failure {
    fn from(e: TimecodeError) -> Self {
        let status = match e {
            TimecodeError::Malformed(_) => TgStatus::MalformedTimecode,
            TimecodeError::OutOfRange(_) => TgStatus::OutOfRange,
            TimecodeError::SubCentisecond(_) => TgStatus::SubCentisecond,
        };
        Failure(status, e.to_string())
    }
}

impl From<SyntaxError> for Failure {
    fn from(e: SyntaxError) -> Self {
        match e {
            SyntaxError::Timecode(t) => t.into(),
            SyntaxError::MalformedHeader { .. } => Failure(TgStatus::MalformedHeader, e.to_string()),
            SyntaxError::MalformedFile { .. } => Failure(TgStatus::MalformedFile, e.to_string()),
            SyntaxError::VersionUnsupported(_) => Failure(TgStatus::VersionUnsupported, e.to_string()),
        }
    }
}

fn set_last_error(msg: Option<String>) {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = msg.map(|m| CString::new(m.replace('\0', " ")).expect("nul bytes replaced"));
    });
}

/// Runs `body`, converting errors and panics into a status.
fn guarded(body: impl FnOnce() -> Result<(), Failure>) -> TgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(None);
            TgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            TgStatus::Panic
        }
    }
}

/// # Safety
/// `s` is NULL or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(TgStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(TgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` is NULL or a live handle from this library.
unsafe fn project_mut<'a>(p: *mut TgProject) -> Result<&'a mut Project, Failure> {
    p.as_mut()
        .map(|h| &mut h.inner)
        .ok_or_else(|| Failure(TgStatus::NullArgument, "project is NULL".into()))
}

unsafe fn project_ref<'a>(p: *const TgProject) -> Result<&'a Project, Failure> {
    p.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| Failure(TgStatus::NullArgument, "project is NULL".into()))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(TgStatus::NullArgument, "out pointer is NULL".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(TgStatus::InvalidArgument, "output has NUL byte".into()))?;
    write_out(out, c.into_raw())
}

fn username(s: &str) -> Result<Username, Failure> {
    Ok(Username::new(s)?)
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` is NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `media_url` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tg_project_new(media_url: *const c_char, out: *mut *mut TgProject) -> TgStatus {
    guarded(|| {
        let project = Project::new(str_arg(media_url, "media_url")?)?;
        write_out(out, Box::into_raw(Box::new(TgProject { inner: project })))
    })
}

/// Parses `.travisgo` file text into a new handle.
///
/// # Safety
/// `text` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tg_project_parse(text: *const c_char, out: *mut *mut TgProject) -> TgStatus {
    guarded(|| {
        let project = parse_project_file(str_arg(text, "text")?)?;
        write_out(out, Box::into_raw(Box::new(TgProject { inner: project })))
    })
}

/// # Safety
/// `project` is NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tg_project_free(project: *mut TgProject) {
    if !project.is_null() {
        drop(Box::from_raw(project));
    }
}

/// Canonical `.travisgo` text.
///
/// # Safety
/// `project` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tg_project_serialize(project: *const TgProject, out: *mut *mut c_char) -> TgStatus {
    guarded(|| write_string(out, serialize_project(project_ref(project)?)))
}

/// The project as a JSON document (same shape as the relay's wire form).
///
/// # Safety
/// `project` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tg_project_to_json(project: *const TgProject, out: *mut *mut c_char) -> TgStatus {
    guarded(|| {
        let json = serde_json::to_string(project_ref(project)?)
            .map_err(|e| Failure(TgStatus::InvalidDocument, e.to_string()))?;
        write_string(out, json)
    })
}

/// # Safety
/// `project` is a live handle; `order` is a `TG_ORDER_*` value.
#[no_mangle]
pub unsafe extern "C" fn tg_project_export(
    project: *const TgProject,
    order: u32,
    out: *mut *mut c_char,
) -> TgStatus {
    guarded(|| {
        let order = match order {
            TG_ORDER_FEED => ExportOrder::Feed,
            TG_ORDER_BY_AUTHOR => ExportOrder::ByAuthor,
            other => return Err(Failure(TgStatus::InvalidArgument, format!("unknown order {other}"))),
        };
        write_string(out, export_document(project_ref(project)?, order))
    })
}

/// # Safety
/// `project` is a live handle; strings are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tg_project_set_meta(
    project: *mut TgProject,
    title: *const c_char,
    description: *const c_char,
) -> TgStatus {
    guarded(|| {
        let p = project_mut(project)?;
        Ok(p.set_meta(str_arg(title, "title")?, str_arg(description, "description")?)?)
    })
}

/// Adds one tag (without `#`) to the vocabulary.
///
/// # Safety
/// `project` is a live handle; `tag` is NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tg_project_define_tag(project: *mut TgProject, tag: *const c_char) -> TgStatus {
    guarded(|| {
        let p = project_mut(project)?;
        Ok(p.define_tags([str_arg(tag, "tag")?])?)
    })
}

/// Creates a post; `end_ms` is `TG_NO_END` for a point post.
///
/// # Safety
/// `project` is a live handle; strings are NUL-terminated;
/// `out_post_number` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn tg_project_create_post(
    project: *mut TgProject,
    author: *const c_char,
    start_ms: u64,
    end_ms: i64,
    category: u32,
    body: *const c_char,
    out_post_number: *mut u64,
) -> TgStatus {
    guarded(|| {
        let p = project_mut(project)?;
        let category = match category {
            TG_CATEGORY_PICTURE => Category::Picture,
            TG_CATEGORY_AUDIO => Category::Audio,
            TG_CATEGORY_TEXT => Category::Text,
            TG_CATEGORY_META => Category::Meta,
            other => return Err(Failure(TgStatus::UnknownCategory, format!("unknown category {other}"))),
        };
        let start = Timecode::from_ms(start_ms)?;
        let end = match end_ms {
            TG_NO_END => None,
            ms if ms >= 0 => Some(Timecode::from_ms(ms as u64)?),
            ms => return Err(Failure(TgStatus::OutOfRange, format!("negative end {ms}"))),
        };
        let number = p.create_post(username(str_arg(author, "author")?)?, start, end, category, str_arg(body, "body")?)?;
        if !out_post_number.is_null() {
            out_post_number.write(number);
        }
        Ok(())
    })
}

/// # Safety
/// `project` is a live handle; strings are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tg_project_edit_post(
    project: *mut TgProject,
    actor: *const c_char,
    post_number: u64,
    new_body: *const c_char,
) -> TgStatus {
    guarded(|| {
        let p = project_mut(project)?;
        let actor = username(str_arg(actor, "actor")?)?;
        Ok(p.edit_post(&actor, post_number, str_arg(new_body, "new_body")?)?)
    })
}

/// # Safety
/// `project` is a live handle; strings are NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tg_project_add_comment(
    project: *mut TgProject,
    actor: *const c_char,
    post_number: u64,
    text: *const c_char,
) -> TgStatus {
    guarded(|| {
        let p = project_mut(project)?;
        let actor = username(str_arg(actor, "actor")?)?;
        Ok(p.add_comment(actor, post_number, str_arg(text, "text")?)?)
    })
}

/// Number of posts in the feed, or 0 for NULL.
///
/// # Safety
/// `project` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tg_project_post_count(project: *const TgProject) -> usize {
    project.as_ref().map_or(0, |h| h.inner.posts().len())
}

/// # Safety
/// `text` is NUL-terminated; `out_ms` is writable.
#[no_mangle]
pub unsafe extern "C" fn tg_timecode_parse(text: *const c_char, out_ms: *mut u64) -> TgStatus {
    guarded(|| {
        let ms = parse_timecode(str_arg(text, "text")?)?;
        write_out(out_ms, ms)
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tg_timecode_format(ms: u64, out: *mut *mut c_char) -> TgStatus {
    guarded(|| write_string(out, format_timecode(ms)?))
}
