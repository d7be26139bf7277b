#ifndef WSNSEC_H
#define WSNSEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Octets in every key.
 */
#define WSN_KEY_LEN 10

/**
 * Largest payload a packet carries.
 */
#define WSN_MAX_PAYLOAD 29

/**
 * Largest wire image: header, full payload and MAC.
 */
#define WSN_MAX_WIRE_LEN 38

typedef enum WsnStatus {
  WSN_STATUS_OK = 0,
  WSN_STATUS_NULL_POINTER = 1,
  WSN_STATUS_INVALID_ARGUMENT = 2,
  WSN_STATUS_BAD_KEY = 3,
  WSN_STATUS_BUFFER_TOO_SMALL = 4,
  WSN_STATUS_FORMAT = 5,
  WSN_STATUS_AUTHENTICATION = 6,
  WSN_STATUS_REPLAY = 7,
  WSN_STATUS_UNKNOWN_DESTINATION = 8,
  WSN_STATUS_NOT_ADDRESSED = 9,
  WSN_STATUS_WRONG_GROUP = 10,
  WSN_STATUS_COUNTER_EXHAUSTED = 11,
  WSN_STATUS_PAYLOAD_TOO_LARGE = 12,
  WSN_STATUS_DOWNGRADE = 13,
  WSN_STATUS_PANIC = 99,
} WsnStatus;

/**
 * Opaque key ring of one node.
 */
typedef struct WsnKeyRing WsnKeyRing;

/**
 * Header fields of a wire image, readable without keys.
 */
typedef struct WsnPacketInfo {
  uint8_t group;
  uint8_t dest;
  uint8_t src;
  uint8_t length;
  /**
   * 0 = XOR keystream, 1..3 = RC5 with 4, 8, 12 rounds.
   */
  uint8_t encryption;
  bool auth;
  uint8_t counter_lsb;
  size_t wire_len;
} WsnPacketInfo;

/**
 * Counters and samples one node keeps about a neighbor.
 */
typedef struct WsnNeighborRecord {
  double ae_t1;
  double ae_t2;
  double pss_t1;
  double pss_t2;
  uint64_t crf;
  uint64_t craf;
  double rc;
  uint64_t npc;
  uint64_t drf;
  uint64_t draf;
  uint64_t pd;
  uint64_t npt;
  uint64_t npr;
} WsnNeighborRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Derives the key ring of node `group:node` whose head is `group:head`.
 * `neighbors` lists the node ids of the other group members.
 *
 * # Safety
 * `master` points to 10 readable octets, `neighbors` to `neighbor_count`
 * octets (or is null when the count is 0), `out` is writable.
 */
enum WsnStatus wsn_keyring_derive(const uint8_t *master,
                                  uint8_t group,
                                  uint8_t node,
                                  uint8_t head,
                                  const uint8_t *neighbors,
                                  size_t neighbor_count,
                                  struct WsnKeyRing **out);

/**
 * Releases a ring from [`wsn_keyring_derive`]. Null is ignored.
 *
 * # Safety
 * `ring` is null or a pointer not yet freed.
 */
void wsn_keyring_free(struct WsnKeyRing *ring);

/**
 * Switches the ring to a new group head.
 *
 * # Safety
 * `ring` is a live ring.
 */
enum WsnStatus wsn_keyring_set_head(struct WsnKeyRing *ring, uint8_t head);

/**
 * Installs the group session key derived from `seed` for the base station
 * at `bs_group:bs_node`.
 *
 * # Safety
 * `ring` is a live ring, `seed` points to 10 readable octets.
 */
enum WsnStatus wsn_keyring_set_session(struct WsnKeyRing *ring,
                                       const uint8_t *seed,
                                       uint8_t bs_group,
                                       uint8_t bs_node);

/**
 * Copies the node-based key the ring currently uses towards its head.
 *
 * # Safety
 * `ring` is a live ring, `out` has room for 10 octets.
 */
enum WsnStatus wsn_keyring_node_based_key(const struct WsnKeyRing *ring, uint8_t *out);

/**
 * Encodes `payload` from the ring's owner to node `dest` (255 broadcasts
 * to the group). `*counter` is the last counter used towards `dest` and is
 * advanced on success.
 *
 * # Safety
 * `ring` is a live ring; `counter`, `out_len` are writable; `payload` has
 * `payload_len` readable octets; `out` has `out_cap` writable octets.
 */
enum WsnStatus wsn_packet_encode(const struct WsnKeyRing *ring,
                                 uint8_t dest,
                                 uint8_t encryption,
                                 bool auth,
                                 uint32_t *counter,
                                 const uint8_t *payload,
                                 size_t payload_len,
                                 uint8_t *out,
                                 size_t out_cap,
                                 size_t *out_len);

/**
 * Decodes a wire image addressed to the ring's owner. Packets with weaker
 * encryption than `min_encryption`, or without a MAC when `require_auth`
 * is set, are rejected. `*counter` is the last counter accepted from the
 * packet's source and is replaced by the reconstructed one on success. `*attempts`, when not null, receives the
 * number of counter candidates tried, also on failure.
 *
 * # Safety
 * `ring` is a live ring; `wire` has `wire_len` readable octets; `counter`
 * and `payload_len` are writable; `payload` has `payload_cap` writable
 * octets; `attempts` is null or writable.
 */
enum WsnStatus wsn_packet_decode(const struct WsnKeyRing *ring,
                                 const uint8_t *wire,
                                 size_t wire_len,
                                 uint32_t loss_threshold,
                                 uint8_t min_encryption,
                                 bool require_auth,
                                 uint32_t *counter,
                                 uint8_t *payload,
                                 size_t payload_cap,
                                 size_t *payload_len,
                                 uint32_t *attempts);

/**
 * Reads the header of a wire image and checks its length.
 *
 * # Safety
 * `wire` has `wire_len` readable octets, `out` is writable.
 */
enum WsnStatus wsn_packet_dissect(const uint8_t *wire, size_t wire_len, struct WsnPacketInfo *out);

/**
 * Trust level of a neighbor. `weights` points to six coefficients, or is
 * null for the defaults (1/7 each).
 *
 * # Safety
 * `record` is readable, `weights` is null or has 6 readable doubles,
 * `out` is writable.
 */
enum WsnStatus wsn_compute_trust(const struct WsnNeighborRecord *record,
                                 const double *weights,
                                 double *out);

/**
 * Static, NUL-terminated description of a status code.
 */
const char *wsn_status_message(enum WsnStatus status);

/**
 * Library version, NUL-terminated.
 */
const char *wsn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WSNSEC_H */
