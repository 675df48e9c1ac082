/*
 * Egress classifier that emulates per-destination links by rewriting
 * packet departure timestamps.  Attached at the traffic-control egress
 * hook with an FQ root qdisc, which holds each packet until its
 * timestamp comes due; the program itself never queues and never drops.
 *
 * Two pinned hash maps are shared with the user-space agent:
 *   emu_params   dst (u32, network byte order) -> wire_link_params
 *   flow_tstamps dst -> last scheduled departure (ns)
 *
 * Builds standalone: clang -O2 -g -target bpf -c edt_kernel.c
 */

#include <linux/bpf.h>
#include <linux/if_ether.h>
#include <linux/ip.h>
#include <linux/pkt_cls.h>

#define SEC(name) __attribute__((section(name), used))
#define __uint(name, val) int (*name)[val]
#define __type(name, val) typeof(val) *name

static void *(*bpf_map_lookup_elem)(void *map, const void *key) =
    (void *)BPF_FUNC_map_lookup_elem;
static long (*bpf_map_update_elem)(void *map, const void *key, const void *value,
                                   __u64 flags) = (void *)BPF_FUNC_map_update_elem;
static __u64 (*bpf_ktime_get_ns)(void) = (void *)BPF_FUNC_ktime_get_ns;

#define bpf_htons(x) __builtin_bswap16(x)

#define MAP_CAPACITY 131072
#define NSEC_PER_SEC 1000000000ULL

/* Byte-for-byte the record the agent writes: two little-endian
 * unsigned 64-bit fields, zero meaning unset. */
struct wire_link_params {
    __u64 rate;    /* bytes/second, 0 = no rate limit */
    __u64 latency; /* nanoseconds, 0 = no added delay */
};

struct {
    __uint(type, BPF_MAP_TYPE_HASH);
    __uint(max_entries, MAP_CAPACITY);
    __type(key, __u32);
    __type(value, struct wire_link_params);
} emu_params SEC(".maps");

struct {
    __uint(type, BPF_MAP_TYPE_HASH);
    __uint(max_entries, MAP_CAPACITY);
    __type(key, __u32);
    __type(value, __u64);
} flow_tstamps SEC(".maps");

SEC("tc")
int edt_emulate(struct __sk_buff *skb)
{
    void *data = (void *)(long)skb->data;
    void *data_end = (void *)(long)skb->data_end;

    struct ethhdr *eth = data;
    if ((void *)(eth + 1) > data_end)
        return TC_ACT_OK;
    if (eth->h_proto != bpf_htons(ETH_P_IP))
        return TC_ACT_OK;

    struct iphdr *ip = (void *)(eth + 1);
    if ((void *)(ip + 1) > data_end)
        return TC_ACT_OK;

    __u32 dst = ip->daddr;
    struct wire_link_params *params = bpf_map_lookup_elem(&emu_params, &dst);
    if (!params)
        return TC_ACT_OK;

    __u64 rate = params->rate;
    __u64 latency = params->latency;
    if (!rate && !latency)
        return TC_ACT_OK;

    __u64 now = bpf_ktime_get_ns();
    __u64 depart = now;

    if (rate) {
        __u64 gap = (__u64)skb->len * NSEC_PER_SEC / rate;
        /* Concurrent CPUs can read the same t_last and schedule from
         * it, letting at most one extra gap through; accepted, the
         * serialized model is the reference for anything tighter. */
        __u64 *t_last = bpf_map_lookup_elem(&flow_tstamps, &dst);
        if (t_last && *t_last + gap > depart)
            depart = *t_last + gap; /* max(now, t_last + gap): idle flows earn no burst */
        bpf_map_update_elem(&flow_tstamps, &dst, &depart, BPF_ANY);
    }

    skb->tstamp = depart + latency;
    return TC_ACT_OK;
}

char _license[] SEC("license") = "GPL";
