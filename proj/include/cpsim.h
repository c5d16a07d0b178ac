/* C interface to the contact-process simulation library.
 *
 * Conventions:
 *   - Every function returns a cps_status; 0 is success. On failure,
 *     cps_last_error() describes the problem (thread-local storage).
 *   - Output strings are malloc'd JSON or plain text; release them with
 *     cps_string_free().
 *   - Graph handles are opaque and immutable; they may be shared freely
 *     across threads and must be released with cps_graph_destroy().
 */
#ifndef CPSIM_H
#define CPSIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct cps_graph cps_graph;

/* 0 ok, 1 internal, 2 bad spec/arguments, 3 resource cap, 4 audit failure */
typedef int cps_status;

enum {
    CPS_OK = 0,
    CPS_ERR_INTERNAL = 1,
    CPS_ERR_SPEC = 2,
    CPS_ERR_RESOURCE = 3,
    CPS_ERR_AUDIT = 4
};

const char* cps_version(void);

/* Message for the most recent failing call on this thread ("" if none). */
const char* cps_last_error(void);

void cps_string_free(char* s);

/* Graph grammar: "star:<n>" | "periodic:<n>:<a1,...,ak>:<depth>" | "pinned:<a1,...,ak>" */
cps_status cps_graph_create(const char* spec, cps_graph** out);
void cps_graph_destroy(cps_graph* g);

/* {"vertices":..,"depth":..,"level_sizes":[..],"hub_count":..,"leaf_count":..,"N":..} */
cps_status cps_graph_stats_json(const cps_graph* g, char** json_out);

/* One trajectory. options_json keys (all optional unless noted):
 *   lambda (required), horizon, seed, init ("all" | "root" | [ids]),
 *   pins ([ids] | "root"), pin_until, freeze_level, probes ([times]),
 *   stop_when_empty (default true)
 * Result: {"extinct":bool,"extinction_time":..,"censored":..,"probes":[..],
 *          "probe_counts":[..],"probe_root":[..],"frozen_total":..,"frozen":{...}} */
cps_status cps_simulate_json(const cps_graph* g, const char* options_json, char** json_out);

/* Debug export of one Poisson event log, "t <time> R <v>" / "t <time> A <from> <to>" lines. */
cps_status cps_eventlog_text(const cps_graph* g, double lambda, double horizon, uint64_t seed,
                             char** text_out);

/* Closed-form bound evaluators; params_json is a flat {"key": number} object. */
cps_status cps_bounds_eval_json(const char* name, const char* params_json, char** json_out);

/* Exact star-chain solves. options_json: {"K":int,"L":int} optional extras. */
cps_status cps_oracle_star_json(int64_t n, double lambda, const char* options_json,
                                char** json_out);

/* Exact small-graph solves. options_json:
 *   {"mode":"stationary","pins":[ids]|"root"} |
 *   {"mode":"extinction","init":"all"|[ids]} |
 *   {"mode":"paths","from":v,"to":v,"max_len":m} */
cps_status cps_oracle_graph_json(const char* graph_spec, double lambda,
                                 const char* options_json, char** json_out);

/* Runs a full experiment from an ExperimentSpec JSON document; writes the
 * CSV/summary files named in the spec and returns the summary JSON.
 * Returns CPS_ERR_AUDIT when a duality-audit experiment finds violations. */
cps_status cps_experiment_run(const char* spec_json, char** summary_json_out);

/* Re-summarize an existing CSV; format "json" or "csv". When out_dir is not
 * NULL, writes summary.json (and SVG plots when with_svg != 0) there. */
cps_status cps_report_csv(const char* csv_path, const char* format, const char* out_dir,
                          int with_svg, char** summary_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CPSIM_H */
