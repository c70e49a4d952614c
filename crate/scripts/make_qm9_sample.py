#!/usr/bin/env python3
"""Write a QM9-layout CSV of small C/N/O/F molecules for tests and demos.

The molecules are random valence-feasible graphs with at most nine heavy
atoms, sanitized and serialized by RDKit. Property columns follow the
QM9 CSV layout; the values are synthetic functions of simple descriptors
with seeded noise, not quantum-chemical results.

Usage: make_qm9_sample.py OUT.csv [COUNT] [SEED]
"""
import csv
import random
import sys

from rdkit import Chem, RDLogger
from rdkit.Chem import Descriptors, rdMolDescriptors

RDLogger.DisableLog("rdApp.*")

VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1}
ATOM_WEIGHTS = [("C", 0.68), ("N", 0.13), ("O", 0.16), ("F", 0.03)]
BOND = {1: Chem.BondType.SINGLE, 2: Chem.BondType.DOUBLE, 3: Chem.BondType.TRIPLE}
COLUMNS = ["mol_id", "smiles", "A", "B", "C", "mu", "alpha", "homo", "lumo", "gap",
           "r2", "zpve", "u0", "u298", "h298", "g298", "cv",
           "u0_atom", "u298_atom", "h298_atom", "g298_atom"]


def pick_atom(rng):
    r = rng.random()
    acc = 0.0
    for sym, w in ATOM_WEIGHTS:
        acc += w
        if r < acc:
            return sym
    return "C"


def random_graph(rng):
    # QM9 is dominated by nine-heavy-atom molecules.
    n = rng.choices(range(1, 10), weights=[1, 1, 2, 3, 5, 8, 14, 30, 60])[0]
    atoms = [pick_atom(rng)]
    used = [0]
    bonds = {}
    for k in range(1, n):
        sym = pick_atom(rng)
        hosts = [i for i in range(k) if used[i] < VALENCE[atoms[i]]]
        if not hosts:
            break
        host = rng.choice(hosts)
        cap = min(VALENCE[atoms[host]] - used[host], VALENCE[sym])
        order = rng.choices([1, 2, 3], weights=[80, 15, 5])[0]
        order = min(order, cap)
        atoms.append(sym)
        used.append(order)
        used[host] += order
        bonds[(host, k)] = order
    # ring closures
    for _ in range(rng.choice([0, 0, 1, 1, 2, 3])):
        free = [i for i in range(len(atoms)) if used[i] < VALENCE[atoms[i]]]
        if len(free) < 2:
            break
        i, j = sorted(rng.sample(free, 2))
        if (i, j) in bonds:
            continue
        cap = min(VALENCE[atoms[i]] - used[i], VALENCE[atoms[j]] - used[j])
        order = 1 if rng.random() < 0.8 else min(2, cap)
        bonds[(i, j)] = order
        used[i] += order
        used[j] += order
    return atoms, bonds


def to_mol(atoms, bonds):
    m = Chem.RWMol()
    for sym in atoms:
        m.AddAtom(Chem.Atom(sym))
    for (i, j), order in bonds.items():
        m.AddBond(i, j, BOND[order])
    mol = m.GetMol()
    try:
        Chem.SanitizeMol(mol)
    except Exception:
        return None
    return mol


def properties(mol, rng):
    heavy = mol.GetNumHeavyAtoms()
    hs = sum(a.GetTotalNumHs() for a in mol.GetAtoms())
    hetero = rdMolDescriptors.CalcNumHeteroatoms(mol)
    rings = rdMolDescriptors.CalcNumRings(mol)
    mr = Descriptors.MolMR(mol)
    tpsa = rdMolDescriptors.CalcTPSA(mol)
    unsat = sum(1 for b in mol.GetBonds() if b.GetBondTypeAsDouble() > 1)
    g = rng.gauss
    u0 = -38.0 * heavy - 0.6 * hs - 1.5 * hetero + 0.05 * g(0, 1)
    atom_e = -0.15 * heavy - 0.08 * hs - 0.02 * unsat + 0.002 * g(0, 1)
    row = {
        "A": 3.0 / (1 + heavy) + 0.3 * rings + 0.05 * abs(g(0, 1)),
        "B": 1.5 / (1 + heavy) + 0.1 * rings + 0.02 * abs(g(0, 1)),
        "C": 1.2 / (1 + heavy) + 0.08 * rings + 0.02 * abs(g(0, 1)),
        "mu": max(0.0, 0.03 * tpsa + 0.4 * hetero + 0.3 * g(0, 1)),
        "alpha": 1.6 * mr + 0.5 * g(0, 1),
        "homo": -0.26 + 0.01 * unsat - 0.004 * hetero + 0.003 * g(0, 1),
        "lumo": 0.05 - 0.02 * unsat - 0.01 * rings + 0.004 * g(0, 1),
        "r2": 120.0 * heavy - 40.0 * rings + 8.0 * g(0, 1),
        "zpve": 0.02 * hs + 0.006 * heavy + 0.0005 * g(0, 1),
        "cv": 2.8 * heavy + 1.1 * hs - 1.5 * rings + 0.3 * g(0, 1),
    }
    row["gap"] = row["lumo"] - row["homo"]
    row["u0"] = u0
    row["u298"] = u0 + 0.006 * heavy
    row["h298"] = row["u298"] + 0.00094
    row["g298"] = row["h298"] - 0.012 * heavy
    row["u0_atom"] = atom_e
    row["u298_atom"] = atom_e - 0.001 * heavy
    row["h298_atom"] = row["u298_atom"] - 0.0005 * heavy
    row["g298_atom"] = row["h298_atom"] + 0.002 * heavy
    return row


def main():
    out = sys.argv[1]
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 6000
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 20200
    rng = random.Random(seed)
    seen = set()
    rows = []
    while len(rows) < count:
        mol = to_mol(*random_graph(rng))
        if mol is None:
            continue
        canon = Chem.MolToSmiles(mol)
        if canon in seen:
            continue
        seen.add(canon)
        # Most records are kekulized; the rest keep RDKit's aromatic form,
        # which the subset parser rejects when a ring is aromatic.
        if rng.random() < 0.9:
            kek = Chem.Mol(mol)
            Chem.Kekulize(kek, clearAromaticFlags=True)
            smiles = Chem.MolToSmiles(kek, kekuleSmiles=True, doRandom=rng.random() < 0.3)
        else:
            smiles = canon
        props = properties(mol, rng)
        row = {"mol_id": f"gdb_{len(rows) + 1}", "smiles": smiles}
        row.update({k: f"{v:.6g}" for k, v in props.items()})
        rows.append(row)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
