import time
from eiscohom.complex import build_complex
from eiscohom.hecke import HeckeSession, HeckeOp, apply_hecke
from eiscohom.eisenstein import primes_above, mat_vec
from eiscohom.sharbly import (canonical_symbol, det_norm, canonical_face_form,
    choose_reducing_point, spanning_point, chain_add, add_symbol, chain_size)
from eiscohom.sharbly import _face_of, _group_occurrences, RED_FORMULAS
from eiscohom import voronoi

cx = build_complex((49, 18, 1))
sess = HeckeSession(cx)
p3 = primes_above(3)[0]
img = apply_hecke(HeckeOp(p3, 1), sess.basis_chains[0], sess.level, check_cycle=False)
level = sess.level
cform_cache = sess.caches
fkey_memo = {}


def face_key(key, i):
    got = fkey_memo.get((key, i))
    if got is None:
        got = canonical_symbol(_face_of(key, i))[0]
        fkey_memo[(key, i)] = got
    return got


cur = dict(img)
t00 = time.time()
for mp in range(500):
    size = chain_size(cur)
    if size <= 1:
        print("DONE mp", mp, "supp", len(cur), "%.1fs total" % (time.time() - t00), flush=True)
        break
    t0 = time.time()
    face_info, class_occs, max_size = {}, {}, 0
    for key in sorted(cur):
        coeff = cur[key]
        for i in range(4):
            fkey = face_key(key, i)
            if fkey is None:
                continue
            info = face_info.get(fkey)
            if info is None and fkey not in face_info:
                sz = det_norm(fkey)
                if sz <= 1:
                    face_info[fkey] = None
                    continue
                got = cform_cache.get(fkey)
                if got is None:
                    got = canonical_face_form(fkey, level)
                    cform_cache[fkey] = got
                info = (sz, got[0], got[1], got[2])
                face_info[fkey] = info
                max_size = max(max_size, sz)
            if info is None:
                continue
            sz, ckey, relsign, gamma = info
            class_occs.setdefault((sz, ckey), []).append(
                (gamma, key, i, coeff * relsign * (-1) ** (i + 1)))
    top = sorted(ck for (sz, ck) in class_occs if sz == max_size)
    tried = 0
    processed = None
    for ckey in top:
        occs = class_occs[(max_size, ckey)]
        tried += 1
        assign = {}
        feasible = True
        for group in _group_occurrences(occs, ckey, choose_reducing_point):
            wc = choose_reducing_point(ckey, [(g, k) for g, k, _, _ in group])
            if wc is None:
                feasible = False
                break
            for gamma, key, i, _ in group:
                assign[(key, i)] = spanning_point(mat_vec(gamma, wc))
        if feasible:
            processed = (ckey, assign, len(occs))
            break
    if processed is None:
        print(f"mp{mp}: STUCK size {size}, {len(top)} classes all infeasible ({time.time()-t0:.1f}s)", flush=True)
        break
    ckey, assign, nocc = processed
    new_chain = {}
    for key, coeff in sorted(cur.items()):
        hit = [i for i in range(4) if (key, i) in assign]
        if not hit:
            chain_add(new_chain, key, coeff)
            continue
        k = len(hit)
        order = hit + [j for j in range(4) if j not in hit]
        ssign = voronoi.perm_sign(tuple(order))
        slots = [key[order[0]], key[order[1]], key[order[2]], key[order[3]],
                 None, None, None, None]
        for pos, i in enumerate(order[:k]):
            slots[4 + pos] = assign[(key, i)]
        for fsign, term in RED_FORMULAS[k]:
            add_symbol(new_chain, tuple(slots[s] for s in term), coeff * ssign * fsign)
    ns = chain_size(new_chain)
    if mp % 10 == 0 or ns != size:
        print(f"mp{mp}: sz{size}->{ns} supp {len(cur)}->{len(new_chain)} classes@max {len(top)} tried {tried} occ {nocc} ({time.time()-t0:.1f}s)", flush=True)
    cur = new_chain
