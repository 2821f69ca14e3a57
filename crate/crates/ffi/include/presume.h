#ifndef PRESUME_H
#define PRESUME_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PresumeStatus {
  PRESUME_STATUS_OK = 0,
  PRESUME_STATUS_NULL_ARGUMENT = 1,
  PRESUME_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad configuration, template name or JSON.
   */
  PRESUME_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The command or explanation could not be parsed.
   */
  PRESUME_STATUS_PARSE_ERROR = 4,
  PRESUME_STATUS_BACKEND_UNAVAILABLE = 5,
  PRESUME_STATUS_RUNTIME_ERROR = 6,
  PRESUME_STATUS_SESSION_CLOSED = 7,
  /**
   * The reply does not fit the pending prompt.
   */
  PRESUME_STATUS_INVALID_REPLY = 8,
  PRESUME_STATUS_PANIC = 9,
} PresumeStatus;

typedef struct PresumeEngine PresumeEngine;

typedef struct PresumeSession PresumeSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an engine. `options_json` may be null for the bundled desk data,
 * or an object with any of `kb`, `embeddings`, `templates`, `relations`,
 * `rules` and `search`.
 *
 * # Safety
 * `options_json` is null or a valid NUL-terminated string; `out` is a valid
 * pointer.
 */
enum PresumeStatus presume_engine_new(const char *options_json, struct PresumeEngine **out);

/**
 * Releases an engine. Sessions opened from it stay usable.
 *
 * # Safety
 * `engine` is null or came from [`presume_engine_new`] and is not used again.
 */
void presume_engine_free(struct PresumeEngine *engine);

/**
 * Proves `command` with the `template` color and writes the proofs as JSON.
 *
 * # Safety
 * `engine` is a live handle; string arguments are valid NUL-terminated
 * strings; `out_json` is a valid pointer.
 */
enum PresumeStatus presume_prove(const struct PresumeEngine *engine,
                                 const char *command,
                                 const char *template_name,
                                 char **out_json);

/**
 * Opens a dialog session and writes its first prompt as JSON.
 *
 * # Safety
 * `engine` is a live handle; string arguments are valid NUL-terminated
 * strings; `out_session` and `out_prompt_json` are valid pointers.
 */
enum PresumeStatus presume_session_start(const struct PresumeEngine *engine,
                                         const char *command,
                                         const char *template_name,
                                         struct PresumeSession **out_session,
                                         char **out_prompt_json);

/**
 * Answers the pending prompt. `reply_json` is `{"choice": n}` (optionally
 * with `"explanation"`), `{"yesno": b}` or `{"text": "..."}`. The result is
 * `{"prompt": ...}` or `{"outcome": ...}`.
 *
 * # Safety
 * `session` is a live handle; `reply_json` is a valid NUL-terminated
 * string; `out_json` is a valid pointer.
 */
enum PresumeStatus presume_session_reply(struct PresumeSession *session,
                                         const char *reply_json,
                                         char **out_json);

/**
 * Writes the session's transcript, candidates and outcome as JSON.
 *
 * # Safety
 * `session` is a live handle; `out_json` is a valid pointer.
 */
enum PresumeStatus presume_session_view(const struct PresumeSession *session, char **out_json);

/**
 * # Safety
 * `session` is null or came from [`presume_session_start`] and is not used
 * again.
 */
void presume_session_free(struct PresumeSession *session);

/**
 * # Safety
 * `s` is null or a string returned by this library, not freed before.
 */
void presume_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *presume_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRESUME_H */
