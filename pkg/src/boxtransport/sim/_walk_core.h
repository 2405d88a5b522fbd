/* Hot loops for the lattice walk. Included by _walk.pyx.
 *
 * Any change here must be mirrored in _walk_py.py: the backends are
 * required to produce identical bits for identical seeds. Only IEEE add,
 * sub, div, mul and sign clearing touch positions, so the AVX-512 and scalar
 * paths agree exactly as long as nothing is contracted into an FMA.
 *
 * Step categories: 0 rest, 1 directed, 2 east, 3 west, 4 north, 5 south.
 * Each 64-bit draw feeds 64/bits steps, low bits first. A step reads a
 * `bits`-wide uniform u and its category is the number of cuts <= u.
 */
#ifndef BOXTRANSPORT_WALK_CORE_H
#define BOXTRANSPORT_WALK_CORE_H

#include <math.h>
#include <stdint.h>
#include <string.h>

#define BT_LANES 8
#define BT_GOLDEN 0x9E3779B97F4A7C15ULL

#if defined(__GNUC__) && defined(__x86_64__) && !defined(BT_NO_SIMD)
#define BT_SIMD 1
#else
#define BT_SIMD 0
#endif

typedef struct {
    double sx[6], sy[6];
    uint64_t cut[5];
    int bits;
    double a, two_a, b, half_b, tau;
} bt_walk;

static inline uint64_t bt_mix64(uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

static inline uint64_t bt_walker_key(uint64_t base, long long index)
{
    return bt_mix64(base + (uint64_t)(index + 1) * BT_GOLDEN);
}

static inline uint64_t bt_draw(uint64_t key, long long m)
{
    return bt_mix64(key + (uint64_t)(m + 1) * BT_GOLDEN);
}

static inline uint64_t bt_mask(int bits)
{
    return bits == 64 ? ~0ULL : (1ULL << bits) - 1;
}

static inline int bt_category(uint64_t u, const uint64_t *cut)
{
    return (u >= cut[0]) + (u >= cut[1]) + (u >= cut[2]) + (u >= cut[3]) + (u >= cut[4]);
}

static inline double bt_fold_y(double y, double half_b, double b)
{
    if (y > half_b)
        return b - y;
    if (y < -half_b)
        return -b - y;
    return y;
}

/* ---- scalar path ------------------------------------------------------ */

static void bt_reflect_block_scalar(const bt_walk *W, double x0, double y0,
                                    uint64_t base, long long first, int lanes,
                                    long long n_steps, double *X, double *Y)
{
    const int R = W->bits, S = 64 / R;
    const uint64_t mask = bt_mask(R);
    const double a = W->a, two_a = W->two_a, b = W->b, half_b = W->half_b;
    double x[BT_LANES], y[BT_LANES];
    uint64_t key[BT_LANES], r[BT_LANES];

    for (int l = 0; l < BT_LANES; l++) {
        x[l] = x0;
        y[l] = y0;
        key[l] = bt_walker_key(base, first + l);
    }
    long long draws = (n_steps + S - 1) / S;
    for (long long m = 0; m < draws; m++) {
        int steps = (m + 1) * S <= n_steps ? S : (int)(n_steps - m * S);
        for (int l = 0; l < BT_LANES; l++)
            r[l] = bt_draw(key[l], m);
        for (int h = 0; h < steps; h++) {
            for (int l = 0; l < BT_LANES; l++) {
                int c = bt_category(r[l] & mask, W->cut);
                r[l] = R == 64 ? 0 : r[l] >> R;
                double xn = fabs(x[l] + W->sx[c]);
                x[l] = xn > a ? two_a - xn : xn;
                y[l] = bt_fold_y(y[l] + W->sy[c], half_b, b);
            }
        }
    }
    for (int l = 0; l < lanes; l++) {
        X[l] = x[l];
        Y[l] = y[l];
    }
}

typedef struct {
    long long nxt, count;
    double x0;
    double *out;
} bt_queue;

/* next walker index that actually has to walk; -1 when exhausted */
static inline long long bt_pop(bt_queue *Q, double a)
{
    while (Q->nxt < Q->count) {
        long long i = Q->nxt++;
        if (Q->x0 >= a) {
            Q->out[i] = 0.0;
            continue;
        }
        return i;
    }
    return -1;
}

static void bt_absorb_chunk_scalar(const bt_walk *W, double x0, uint64_t base,
                                   long long first, long long count,
                                   long long max_steps, double *out)
{
    const int R = W->bits, S = 64 / R;
    const uint64_t mask = bt_mask(R);
    const double a = W->a, tau = W->tau;
    bt_queue Q = {0, count, x0, out};
    double x[BT_LANES];
    uint64_t key[BT_LANES];
    long long m[BT_LANES], who[BT_LANES];
    int live = 0;

    for (int l = 0; l < BT_LANES; l++) {
        who[l] = bt_pop(&Q, a);
        if (who[l] >= 0) {
            key[l] = bt_walker_key(base, first + who[l]);
            x[l] = x0;
            m[l] = 0;
            live++;
        }
    }
    while (live > 0) {
        for (int l = 0; l < BT_LANES; l++) {
            if (who[l] < 0)
                continue;
            uint64_t r = bt_draw(key[l], m[l]);
            double xl = x[l];
            int done = 0;
            for (int h = 0; h < S; h++) {
                int c = bt_category(r & mask, W->cut);
                r = R == 64 ? 0 : r >> R;
                double xn = xl + W->sx[c];
                if (xn >= a) {
                    out[who[l]] = ((double)(m[l] * S + h) + (a - xl) / (xn - xl)) * tau;
                    done = 1;
                    break;
                }
                xl = fabs(xn);
            }
            x[l] = xl;
            m[l]++;
            if (!done && m[l] * S >= max_steps) {
                out[who[l]] = INFINITY;
                done = 1;
            }
            if (done) {
                live--;
                who[l] = bt_pop(&Q, a);
                if (who[l] >= 0) {
                    key[l] = bt_walker_key(base, first + who[l]);
                    x[l] = x0;
                    m[l] = 0;
                    live++;
                }
            }
        }
    }
}

/* ---- AVX-512 path ----------------------------------------------------- */

#if BT_SIMD
#define BT_AVX __attribute__((target("avx512f,avx512dq"), noinline))

typedef uint64_t bt_vu __attribute__((vector_size(64)));
typedef double bt_vd __attribute__((vector_size(64)));

#define BT_SPLAT_U(v) ((bt_vu){0} + (uint64_t)(v))
#define BT_SPLAT_D(v) ((bt_vd){0} + (double)(v))
#define BT_VMIX(z)                                                         \
    do {                                                                   \
        (z) = ((z) ^ ((z) >> 30)) * 0xBF58476D1CE4E5B9ULL;                 \
        (z) = ((z) ^ ((z) >> 27)) * 0x94D049BB133111EBULL;                 \
        (z) = (z) ^ ((z) >> 31);                                           \
    } while (0)
/* category bands as lane masks; exactly one is set per lane */
#define BT_VBANDS(u, cutv, band)                                           \
    do {                                                                   \
        bt_vu ge_[5];                                                      \
        for (int k_ = 0; k_ < 5; k_++)                                     \
            ge_[k_] = (bt_vu)((u) >= cutv[k_]);                            \
        band[0] = ~ge_[0];                                                 \
        for (int k_ = 1; k_ < 5; k_++)                                     \
            band[k_] = ge_[k_ - 1] & ~ge_[k_];                             \
        band[5] = ge_[4];                                                  \
    } while (0)
/* table lookup by band; the or-reduction reproduces the entry bit for bit */
#define BT_VLOOKUP(tab, band, out)                                         \
    do {                                                                   \
        bt_vu acc_ = BT_SPLAT_U(0);                                        \
        for (int k_ = 0; k_ < 6; k_++)                                     \
            acc_ |= band[k_] & tab[k_];                                    \
        (out) = (bt_vd)acc_;                                               \
    } while (0)

BT_AVX static void bt_reflect_block_avx(const bt_walk *W, double x0, double y0,
                                        uint64_t base, long long first, int lanes,
                                        long long n_steps, double *X, double *Y)
{
    const int R = W->bits, S = 64 / R;
    const bt_vu mask = BT_SPLAT_U(bt_mask(R)), sign = BT_SPLAT_U(0x7FFFFFFFFFFFFFFFULL);
    const bt_vd a = BT_SPLAT_D(W->a), two_a = BT_SPLAT_D(W->two_a);
    const bt_vd b = BT_SPLAT_D(W->b), half_b = BT_SPLAT_D(W->half_b);
    const bt_vd nhalf_b = BT_SPLAT_D(-W->half_b), nb = BT_SPLAT_D(-W->b);
    bt_vu cutv[5], tx[6], ty[6], key;
    for (int k = 0; k < 5; k++)
        cutv[k] = BT_SPLAT_U(W->cut[k]);
    for (int k = 0; k < 6; k++) {
        uint64_t u;
        memcpy(&u, &W->sx[k], 8);
        tx[k] = BT_SPLAT_U(u);
        memcpy(&u, &W->sy[k], 8);
        ty[k] = BT_SPLAT_U(u);
    }
    for (int l = 0; l < BT_LANES; l++)
        key[l] = bt_walker_key(base, first + l);
    bt_vd x = BT_SPLAT_D(x0), y = BT_SPLAT_D(y0);

    long long draws = (n_steps + S - 1) / S;
    for (long long m = 0; m < draws; m++) {
        int steps = (m + 1) * S <= n_steps ? S : (int)(n_steps - m * S);
        bt_vu r = key + (uint64_t)(m + 1) * BT_GOLDEN;
        BT_VMIX(r);
        for (int h = 0; h < steps; h++) {
            bt_vu u = r & mask, band[6];
            r = R == 64 ? BT_SPLAT_U(0) : r >> R;
            BT_VBANDS(u, cutv, band);
            bt_vd dx, xn;
            BT_VLOOKUP(tx, band, dx);
            xn = (bt_vd)((bt_vu)(x + dx) & sign);
            bt_vu gt = (bt_vu)(xn > a);
            x = (bt_vd)((gt & (bt_vu)(two_a - xn)) | (~gt & (bt_vu)xn));
            bt_vd dy, yn;
            BT_VLOOKUP(ty, band, dy);
            yn = y + dy;
            bt_vu hi = (bt_vu)(yn > half_b), lo = (bt_vu)(yn < nhalf_b);
            y = (bt_vd)((hi & (bt_vu)(b - yn)) | (lo & (bt_vu)(nb - yn))
                        | (~(hi | lo) & (bt_vu)yn));
        }
    }
    for (int l = 0; l < lanes; l++) {
        X[l] = x[l];
        Y[l] = y[l];
    }
}

BT_AVX static void bt_absorb_chunk_avx(const bt_walk *W, double x0, uint64_t base,
                                       long long first, long long count,
                                       long long max_steps, double *out)
{
    const int R = W->bits, S = 64 / R;
    const bt_vu mask = BT_SPLAT_U(bt_mask(R)), sign = BT_SPLAT_U(0x7FFFFFFFFFFFFFFFULL);
    const bt_vd a = BT_SPLAT_D(W->a);
    const double as = W->a, tau = W->tau;
    bt_queue Q = {0, count, x0, out};
    const long long max_draws = (max_steps + S - 1) / S;
    bt_vu cutv[5], tx[6], key = BT_SPLAT_U(0), mv = BT_SPLAT_U(0), alive = BT_SPLAT_U(0);
    bt_vd x = BT_SPLAT_D(x0);
    long long who[BT_LANES];
    int live = 0;

    for (int k = 0; k < 5; k++)
        cutv[k] = BT_SPLAT_U(W->cut[k]);
    for (int k = 0; k < 6; k++) {
        uint64_t u;
        memcpy(&u, &W->sx[k], 8);
        tx[k] = BT_SPLAT_U(u);
    }
    for (int l = 0; l < BT_LANES; l++) {
        who[l] = bt_pop(&Q, as);
        if (who[l] >= 0) {
            key[l] = bt_walker_key(base, first + who[l]);
            alive[l] = ~0ULL;
            live++;
        }
    }
    while (live > 0) {
        bt_vu r = key + (mv + 1) * BT_GOLDEN;
        BT_VMIX(r);
        /* first crossing per lane, resolved once the draw is used up */
        bt_vu seen = BT_SPLAT_U(0), fh = BT_SPLAT_U(0);
        bt_vd xb = x, xa = x;
        for (int h = 0; h < S; h++) {
            bt_vu u = r & mask, band[6];
            r = R == 64 ? BT_SPLAT_U(0) : r >> R;
            BT_VBANDS(u, cutv, band);
            bt_vd dx, xn;
            BT_VLOOKUP(tx, band, dx);
            xn = x + dx;
            bt_vu fresh = (bt_vu)(xn >= a) & ~seen;
            fh = (fresh & BT_SPLAT_U(h)) | (~fresh & fh);
            xb = (bt_vd)((fresh & (bt_vu)x) | (~fresh & (bt_vu)xb));
            xa = (bt_vd)((fresh & (bt_vu)xn) | (~fresh & (bt_vu)xa));
            seen |= fresh;
            x = (bt_vd)((bt_vu)xn & sign);
        }
        mv += 1;
        bt_vu ended = (seen | (bt_vu)(mv >= (uint64_t)max_draws)) & alive;
        uint64_t any = 0;
        for (int l = 0; l < BT_LANES; l++)
            any |= ended[l];
        if (!any)
            continue;
        for (int l = 0; l < BT_LANES; l++) {
            if (!ended[l])
                continue;
            if (seen[l])
                out[who[l]] = ((double)((long long)(mv[l] - 1) * S + (long long)fh[l])
                               + (as - xb[l]) / (xa[l] - xb[l])) * tau;
            else
                out[who[l]] = INFINITY;
            live--;
            mv[l] = 0;
            alive[l] = 0;
            who[l] = bt_pop(&Q, as);
            if (who[l] >= 0) {
                key[l] = bt_walker_key(base, first + who[l]);
                x[l] = x0;
                alive[l] = ~0ULL;
                live++;
            }
        }
    }
}

static int bt_simd_ok(void)
{
    static int ok = -1;
    if (ok < 0) {
        __builtin_cpu_init();
        ok = __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512dq");
    }
    return ok;
}
#else
static int bt_simd_ok(void) { return 0; }
#endif

/* ---- dispatch --------------------------------------------------------- */

static void bt_reflect_block(const bt_walk *W, double x0, double y0, uint64_t base,
                             long long first, int lanes, long long n_steps,
                             double *X, double *Y, int simd)
{
#if BT_SIMD
    if (simd && bt_simd_ok()) {
        bt_reflect_block_avx(W, x0, y0, base, first, lanes, n_steps, X, Y);
        return;
    }
#endif
    (void)simd;
    bt_reflect_block_scalar(W, x0, y0, base, first, lanes, n_steps, X, Y);
}

static void bt_absorb_chunk(const bt_walk *W, double x0, uint64_t base,
                            long long first, long long count,
                            long long max_steps, double *out, int simd)
{
#if BT_SIMD
    if (simd && bt_simd_ok()) {
        bt_absorb_chunk_avx(W, x0, base, first, count, max_steps, out);
        return;
    }
#endif
    (void)simd;
    bt_absorb_chunk_scalar(W, x0, base, first, count, max_steps, out);
}

#endif
