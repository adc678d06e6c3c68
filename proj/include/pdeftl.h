#ifndef PDEFTL_H
#define PDEFTL_H

/*
 * C interface to the plausibly-deniable flash translation layer simulator.
 *
 * Every function returns a status code: 0 on success, otherwise one of the
 * PDEFTL_E_* values below. pdeftl_last_error_message() describes the most
 * recent failure on the calling thread. Strings returned through char**
 * out-parameters are heap-allocated; release them with pdeftl_string_free().
 *
 * Device images, snapshots, configs and traces are files; passwords are
 * passed as NUL-terminated strings and never stored. No password or derived
 * key material ever appears in returned text or error messages.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes, in one-to-one correspondence with the library's internal
 * error classes. The order is part of the ABI. */
enum {
  PDEFTL_OK = 0,
  PDEFTL_E_INVALID_GEOMETRY = 1,
  PDEFTL_E_OUT_OF_RANGE = 2,
  PDEFTL_E_PAGE_NOT_ERASED = 3,
  PDEFTL_E_BAD_BLOCK = 4,
  PDEFTL_E_GEOMETRY_MISMATCH = 5,
  PDEFTL_E_EMPTY_PASSWORD = 6,
  PDEFTL_E_LENGTH_MISMATCH = 7,
  PDEFTL_E_TAG_TOO_LARGE = 8,
  PDEFTL_E_SLOT_OUT_OF_RANGE = 9,
  PDEFTL_E_SAME_PASSWORD = 10,
  PDEFTL_E_GEOMETRY_TOO_SMALL = 11,
  PDEFTL_E_NO_MATCH = 12,
  PDEFTL_E_WRONG_MODE = 13,
  PDEFTL_E_DEVICE_FULL = 14,
  PDEFTL_E_COMMIT_FAILED = 15,
  PDEFTL_E_NO_VALID_SUPERBLOCK = 16,
  PDEFTL_E_RECOVERY_REQUIRED = 17,
  PDEFTL_E_VOLUMES_COLLIDE = 18,
  PDEFTL_E_TRACE_ERROR = 19,
  PDEFTL_E_TOO_FEW_TRIALS = 20,
  PDEFTL_E_EMPTY_REGION = 21,
  PDEFTL_E_BAD_CONFIG = 22,
  PDEFTL_E_IO_ERROR = 23,
  PDEFTL_E_BAD_SNAPSHOT = 24,
  PDEFTL_E_INVALID_ARGUMENT = 100, /* null pointer or malformed call */
  PDEFTL_E_INTERNAL = 101          /* unexpected failure inside the library */
};

/* Short stable name for a status code ("ok", "device_full", ...). */
const char* pdeftl_status_name(int status);

/* Message for the last failure on this thread; empty string if none. The
 * pointer stays valid until the next library call on the same thread. */
const char* pdeftl_last_error_message(void);

/* Release a string returned through a char** out-parameter. NULL is a no-op. */
void pdeftl_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Device lifecycle. A device image is a snapshot file with sidecar.  */
/* ------------------------------------------------------------------ */

typedef struct pdeftl_device pdeftl_device;

/* Create a freshly formatted device image at image_path. config_text is
 * key=value text (empty or NULL for defaults). */
int pdeftl_format_image(const char* image_path, const char* config_text,
                        const char* decoy_password, const char* hidden_password);

/* Open an existing image. The device starts locked. */
int pdeftl_open(const char* image_path, const char* config_text,
                pdeftl_device** out_device);

/* Persist the device's flash state back to an image file. The device must
 * be locked (no open session; lock with pdeftl_commit_shutdown first). */
int pdeftl_save(pdeftl_device* device, const char* image_path);

void pdeftl_close(pdeftl_device* device);

/* ------------------------------------------------------------------ */
/* Sessions and the data path.                                        */
/* ------------------------------------------------------------------ */

int pdeftl_unlock(pdeftl_device* device, const char* decoy_password);
int pdeftl_unlock_hidden(pdeftl_device* device, const char* decoy_password,
                         const char* hidden_password);
int pdeftl_commit_shutdown(pdeftl_device* device);
int pdeftl_crash(pdeftl_device* device);

/* Rebuild mappings by scanning the flash. hidden_password may be NULL for a
 * decoy-only recovery, which treats hidden pages as reclaimable. */
int pdeftl_recover(pdeftl_device* device, const char* decoy_password,
                   const char* hidden_password);

/* data_len must equal the configured page size. */
int pdeftl_write_sector(pdeftl_device* device, uint32_t lba, const uint8_t* data,
                        uint32_t data_len);
int pdeftl_hidden_write_sector(pdeftl_device* device, uint32_t lba,
                               const uint8_t* data, uint32_t data_len);
/* out must hold page-size bytes; reads the current session's volume. */
int pdeftl_read_sector(pdeftl_device* device, uint32_t lba, uint8_t* out,
                       uint32_t out_len);
int pdeftl_tick(pdeftl_device* device, uint32_t n);

/* ------------------------------------------------------------------ */
/* Observation.                                                       */
/* ------------------------------------------------------------------ */

/* Counters and device state as key=value lines. */
int pdeftl_metrics_text(pdeftl_device* device, char** out_text);

/* Capture the flash state to a snapshot file. */
int pdeftl_save_snapshot(pdeftl_device* device, const char* snapshot_path);

/* ------------------------------------------------------------------ */
/* Traces, diffs, experiments.                                        */
/* ------------------------------------------------------------------ */

/* Replay a line-oriented trace against an open device. Snapshot steps write
 * <snapshot_dir>/<name>.snap (snapshot_dir NULL or empty = current dir).
 * hidden_password may be NULL when the trace touches no hidden state.
 * On success returns metrics text as from pdeftl_metrics_text. */
int pdeftl_replay_trace(pdeftl_device* device, const char* trace_text,
                        const char* decoy_password, const char* hidden_password,
                        const char* snapshot_dir, char** out_metrics_text);

/* Grammar reference for trace files, one op per line. */
const char* pdeftl_trace_format(void);

/* Diff two snapshot files; out_csv gets block,page,change rows. */
int pdeftl_diff_snapshots(const char* path_a, const char* path_b, char** out_csv,
                          uint64_t* out_changed_pages);

/* Run a paired-trial distinguisher experiment from key=value config text.
 * out_report_csv gets the classifier report; out_trials_csv (optional,
 * may be NULL) gets one row per trial interval. */
int pdeftl_run_experiment(const char* config_text, const char* decoy_password,
                          const char* hidden_password, char** out_report_csv,
                          char** out_trials_csv);

/* Byte-randomness tests over page regions of a snapshot file. regions_text
 * is one "first_page count" pair per line; empty/NULL means the whole
 * device as one region. out_all_pass is 1 if every region passes at alpha. */
int pdeftl_randomness_battery(const char* snapshot_path, const char* regions_text,
                              double alpha, char** out_csv, int* out_all_pass);

#ifdef __cplusplus
}
#endif

#endif /* PDEFTL_H */
