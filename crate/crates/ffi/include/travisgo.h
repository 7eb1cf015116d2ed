#ifndef TRAVISGO_H
#define TRAVISGO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define TG_CATEGORY_PICTURE 0

#define TG_CATEGORY_AUDIO 1

#define TG_CATEGORY_TEXT 2

#define TG_CATEGORY_META 3

#define TG_ORDER_FEED 0

#define TG_ORDER_BY_AUTHOR 1

// Pass as `end_ms` for a post without an end point.
#define TG_NO_END -1

// Result code of every fallible call.
typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_NULL_ARGUMENT = 1,
  TG_STATUS_INVALID_UTF8 = 2,
  TG_STATUS_INVALID_ARGUMENT = 3,
  TG_STATUS_MALFORMED_URL = 10,
  TG_STATUS_MULTILINE_META = 11,
  TG_STATUS_INVALID_TAG = 12,
  TG_STATUS_INVALID_USERNAME = 13,
  TG_STATUS_UNKNOWN_CATEGORY = 14,
  TG_STATUS_EMPTY_BODY = 15,
  TG_STATUS_MULTILINE_COMMENT = 16,
  TG_STATUS_INVERTED_RANGE = 17,
  TG_STATUS_UNKNOWN_POST = 18,
  TG_STATUS_NOT_AUTHOR = 19,
  TG_STATUS_INVALID_DOCUMENT = 20,
  TG_STATUS_MALFORMED_TIMECODE = 30,
  TG_STATUS_OUT_OF_RANGE = 31,
  TG_STATUS_SUB_CENTISECOND = 32,
  TG_STATUS_MALFORMED_HEADER = 33,
  TG_STATUS_MALFORMED_FILE = 34,
  TG_STATUS_VERSION_UNSUPPORTED = 35,
  TG_STATUS_PANIC = 99,
} TgStatus;

// Opaque project handle.
typedef struct TgProject TgProject;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until
// the next call into this library on the same thread.
const char *tg_last_error_message(void);

// # Safety
// `s` is NULL or a string returned by this library, not yet freed.
void tg_string_free(char *s);

// # Safety
// `media_url` is a NUL-terminated string; `out` is writable.
enum TgStatus tg_project_new(const char *media_url, struct TgProject **out);

// Parses `.travisgo` file text into a new handle.
//
// # Safety
// `text` is a NUL-terminated string; `out` is writable.
enum TgStatus tg_project_parse(const char *text, struct TgProject **out);

// # Safety
// `project` is NULL or a live handle; it must not be used afterwards.
void tg_project_free(struct TgProject *project);

// Canonical `.travisgo` text.
//
// # Safety
// `project` is a live handle; `out` is writable.
enum TgStatus tg_project_serialize(const struct TgProject *project, char **out);

// The project as a JSON document (same shape as the relay's wire form).
//
// # Safety
// `project` is a live handle; `out` is writable.
enum TgStatus tg_project_to_json(const struct TgProject *project, char **out);

// # Safety
// `project` is a live handle; `order` is a `TG_ORDER_*` value.
enum TgStatus tg_project_export(const struct TgProject *project, uint32_t order, char **out);

// # Safety
// `project` is a live handle; strings are NUL-terminated.
enum TgStatus tg_project_set_meta(struct TgProject *project,
                                  const char *title,
                                  const char *description);

// Adds one tag (without `#`) to the vocabulary.
//
// # Safety
// `project` is a live handle; `tag` is NUL-terminated.
enum TgStatus tg_project_define_tag(struct TgProject *project, const char *tag);

// Creates a post; `end_ms` is `TG_NO_END` for a point post.
//
// # Safety
// `project` is a live handle; strings are NUL-terminated;
// `out_post_number` is NULL or writable.
enum TgStatus tg_project_create_post(struct TgProject *project,
                                     const char *author,
                                     uint64_t start_ms,
                                     int64_t end_ms,
                                     uint32_t category,
                                     const char *body,
                                     uint64_t *out_post_number);

// # Safety
// `project` is a live handle; strings are NUL-terminated.
enum TgStatus tg_project_edit_post(struct TgProject *project,
                                   const char *actor,
                                   uint64_t post_number,
                                   const char *new_body);

// # Safety
// `project` is a live handle; strings are NUL-terminated.
enum TgStatus tg_project_add_comment(struct TgProject *project,
                                     const char *actor,
                                     uint64_t post_number,
                                     const char *text);

// Number of posts in the feed, or 0 for NULL.
//
// # Safety
// `project` is NULL or a live handle.
size_t tg_project_post_count(const struct TgProject *project);

// # Safety
// `text` is NUL-terminated; `out_ms` is writable.
enum TgStatus tg_timecode_parse(const char *text, uint64_t *out_ms);

// # Safety
// `out` is writable.
enum TgStatus tg_timecode_format(uint64_t ms, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRAVISGO_H */
