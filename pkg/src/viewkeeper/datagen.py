"""Deterministic university dataset and random RI-valid insertion batches."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from decimal import Decimal
from functools import lru_cache

from . import corpus
from .catalog import Catalog
from .errors import ViewkeeperError
from .relstore import Database, insert_batch
from .sqlparse import parse_schema, parse_view

SESSION = "2010-2014"
OTHER_SESSIONS = ("2009-2013", "2011-2015", "2012-2016")
NAMED = ("IT", "BBA")


@lru_cache(maxsize=None)
def university_catalog() -> Catalog:
    return parse_schema(corpus.read("university.sql"), "university.sql")


def university_views():
    catalog = university_catalog()
    return [
        parse_view(corpus.read(f"{name}.sql"), catalog, f"{name}.sql")
        for name in ("results_IT", "results_BBA")
    ]


@dataclass(frozen=True)
class GenParams:
    """Sizes of the generated database.

    ``sessions_it`` is the number of courses in session 2010-2014 (the IT
    department gets an even share ``sessions_it // departments``).
    ``sessions_bba`` sets the BBA department's share the same way, so the BBA
    department sees the density of a ``sessions_bba``-course scenario while
    the total stays ``sessions_it``. Equal values give a uniform spread.
    """

    departments: int = 25
    students: int = 3000
    courses: int = 1000
    results: int = 1500
    sessions_it: int = 50
    sessions_bba: int = 100
    seed: int = 0
    scale: float = 1.0

    def scaled(self) -> "GenParams":
        def s(n: int) -> int:
            return int(math.floor(round(n * self.scale, 9)))

        return replace(
            self,
            departments=s(self.departments),
            students=s(self.students),
            courses=s(self.courses),
            results=s(self.results),
            sessions_it=s(self.sessions_it),
            sessions_bba=s(self.sessions_bba),
            scale=1.0,
        )


def _round_robin(n: int, buckets: int) -> list[int]:
    """Sizes of ``buckets`` groups when ``n`` items are dealt in turn."""
    return [n // buckets + (1 if b < n % buckets else 0) for b in range(buckets)]


def session_plan(p: GenParams) -> list[int]:
    """Session-2010-2014 course count per department (index 0 is Dep_no 1)."""
    d = p.departments
    it_share = p.sessions_it // d
    bba_share = p.sessions_bba // d
    rest = max(p.sessions_it - it_share - bba_share, 0) if d > 2 else 0
    return [it_share, bba_share, *_round_robin(rest, d - 2)]


def validate(p: GenParams) -> None:
    if p.departments < len(NAMED):
        raise ViewkeeperError(
            f"need at least {len(NAMED)} departments for the named ones, got {p.departments}"
        )
    if min(p.students, p.courses, p.results) < 0:
        raise ViewkeeperError("row counts must be non-negative")
    if p.results and (p.students < 1 or p.courses < p.departments):
        raise ViewkeeperError("results need students and at least one course per department")
    per_dept = _round_robin(p.courses, p.departments)
    for dep, (have, want) in enumerate(zip(per_dept, session_plan(p)), start=1):
        if want > have:
            raise ViewkeeperError(
                f"department {dep} has {have} courses, cannot put {want} in session {SESSION}"
            )


def _dep_name(n: int) -> str:
    return NAMED[n - 1] if n <= len(NAMED) else f"DEPT{n:02d}"


def gen_dataset(params: GenParams = GenParams()) -> Database:
    """Build the university database with round-robin entity assignment.

    Students and courses are dealt to departments in turn, so every department
    holds the same number of each. Attribute values that never influence the
    counts (CNIC, marks, GPA, which student took which course) are drawn from a
    generator seeded by ``params.seed``.
    """
    p = params.scaled()
    validate(p)
    rng = random.Random(p.seed)
    d = p.departments
    departments = [(n, _dep_name(n), f"HOD {n:02d}") for n in range(1, d + 1)]

    students = []
    for roll in range(1, p.students + 1):
        cnic = f"{rng.randrange(10**5):05d}-{rng.randrange(10**7):07d}-{rng.randrange(10)}"
        marks = Decimal(rng.randrange(55000, 110001)) / 100
        students.append((roll, f"Student {roll:05d}", cnic, marks, (roll - 1) % d + 1))

    plan = session_plan(p)
    placed = [0] * d
    courses = []
    by_dept: list[list[int]] = [[] for _ in range(d)]
    for code in range(1, p.courses + 1):
        dep = (code - 1) % d
        if placed[dep] < plan[dep]:
            session = SESSION
            placed[dep] += 1
        else:
            session = rng.choice(OTHER_SESSIONS)
        courses.append((code, f"Course {code:04d}", session, dep + 1))
        by_dept[dep].append(code)

    results = []
    for rid in range(1, p.results + 1):
        roll = rng.randrange(p.students) + 1
        code = rng.choice(by_dept[(roll - 1) % d])
        gpa = (Decimal(rng.randrange(0, 401)) / 100).quantize(Decimal("0.01"))
        results.append((rid, roll, code, gpa))

    db = Database(university_catalog())
    insert_batch(
        db,
        {"Department": departments, "Student": students, "Courses": courses, "Results": results},
    )
    return db


# ---------------------------------------------------------------------------
# Random insertions
# ---------------------------------------------------------------------------


def _fresh_int(used: set, rng: random.Random) -> int:
    n = max((k[0] for k in used if isinstance(k[0], int)), default=0) + 1 + rng.randrange(3)
    while (n,) in used:
        n += 1
    return n


def _random_value(attr, rng: random.Random):
    if attr.domain == "integer":
        return rng.randrange(-5, 50)
    if attr.domain == "decimal":
        return Decimal(rng.randrange(-500, 5000)) / 100
    return "".join(rng.choice("abcxyz") for _ in range(rng.randrange(1, min(attr.length, 4) + 1)))


def random_batch(
    db: Database,
    rng: random.Random,
    *,
    max_rows: int = 4,
    relations: list[str] | None = None,
) -> dict[str, list[tuple]]:
    """A random batch that satisfies every key and FK constraint of ``db``.

    Works for any catalog whose primary keys are single integer attributes
    that are not themselves foreign keys. Non-key values are usually copied
    from an existing row of the same relation so that predicates keep
    matching; FK values come from existing or same-batch parents.
    """
    catalog = db.catalog
    chosen = relations or [r for r in catalog.relations if rng.random() < 0.6]
    if not chosen:
        chosen = [rng.choice(sorted(catalog.relations))]
    batch: dict[str, list[tuple]] = {}
    staged_keys: dict[str, list[tuple]] = {}
    for name in catalog.topological_order():
        if name not in chosen:
            continue
        table = db.tables[name]
        schema = table.schema
        existing = list(table.rows.values())
        used = set(table.rows)
        rows = []
        for _ in range(rng.randrange(1, max_rows + 1)):
            template = rng.choice(existing) if existing and rng.random() < 0.8 else None
            values = [
                template[i] if template is not None else _random_value(a, rng)
                for i, a in enumerate(schema.attributes)
            ]
            for fk in schema.foreign_keys:
                parents = list(db.tables[fk.target].rows) + staged_keys.get(fk.target, [])
                if not parents:
                    break
                ref = rng.choice(parents)
                target = catalog.relations[fk.target]
                for local, remote in fk.pairs:
                    values[schema.index(local)] = ref[target.primary_key.index(remote)]
            else:
                key = _fresh_int(used, rng)
                values[schema.index(schema.primary_key[0])] = key
                used.add((key,))
                rows.append(tuple(values))
                staged_keys.setdefault(name, []).append((key,))
        if rows:
            batch[name] = rows
    return batch


def random_university_batch(
    db: Database,
    rng: random.Random,
    *,
    relations: list[str] | None = None,
    max_rows: int = 4,
) -> dict[str, list[tuple]]:
    """Random insertions into the university schema, biased toward view hits.

    New departments are often named IT or BBA, new courses often fall in
    session 2010-2014, and new results usually pair a student with a course of
    the student's own department, so maintained views actually change.
    """
    chosen = relations or [
        r for r in ("Department", "Student", "Courses", "Results") if rng.random() < 0.5
    ] or [rng.choice(("Department", "Student", "Courses", "Results"))]
    depts = dict(db.tables["Department"].rows)
    student_dep = {k[0]: row[4] for k, row in db.tables["Student"].rows.items()}
    course_dep = {k[0]: row[3] for k, row in db.tables["Courses"].rows.items()}
    in_session = {k[0] for k, row in db.tables["Courses"].rows.items() if row[2] == SESSION}
    named = [k[0] for k, row in depts.items() if row[1] in NAMED]

    def next_key(table: str, extra: list[int]) -> int:
        keys = [k[0] for k in db.tables[table].rows] + extra
        return max(keys, default=0) + 1

    fresh_depts: list[int] = []
    fresh_students: list[int] = []
    fresh_courses: list[int] = []

    def pick_dept() -> int:
        if fresh_depts and rng.random() < 0.4:
            return rng.choice(fresh_depts)
        pool = named if named and rng.random() < 0.6 else [k[0] for k in depts]
        return rng.choice(pool)

    batch: dict[str, list[tuple]] = {}
    if "Department" in chosen:
        rows = []
        for _ in range(rng.randrange(1, max_rows + 1)):
            n = next_key("Department", [r[0] for r in rows])
            name = rng.choice([*NAMED, f"DEPT{n:02d}", "Math"])
            rows.append((n, name, f"HOD {n:02d}"))
        batch["Department"] = rows
        for r in rows:
            depts[(r[0],)] = r
            fresh_depts.append(r[0])
            if r[1] in NAMED:
                named.append(r[0])
    if "Student" in chosen and depts:
        rows = []
        for _ in range(rng.randrange(1, max_rows + 1)):
            n = next_key("Student", [r[0] for r in rows])
            dep = pick_dept()
            marks = Decimal(rng.randrange(55000, 110001)) / 100
            rows.append((n, f"Student {n:05d}", f"{n:05d}-0000000-0", marks, dep))
            student_dep[n] = dep
            fresh_students.append(n)
        batch["Student"] = rows
    if "Courses" in chosen and depts:
        rows = []
        for _ in range(rng.randrange(1, max_rows + 1)):
            n = next_key("Courses", [r[0] for r in rows])
            dep = pick_dept()
            session = SESSION if rng.random() < 0.5 else rng.choice(OTHER_SESSIONS)
            rows.append((n, f"Course {n:04d}", session, dep))
            course_dep[n] = dep
            fresh_courses.append(n)
            if session == SESSION:
                in_session.add(n)
        batch["Courses"] = rows
    if "Results" in chosen and student_dep and course_dep:
        rows = []
        by_dep: dict[int, list[int]] = {}
        for code, dep in course_dep.items():
            by_dep.setdefault(dep, []).append(code)
        hot = [s for s, dep in student_dep.items() if dep in named]
        for _ in range(rng.randrange(1, max_rows + 1)):
            n = next_key("Results", [r[0] for r in rows])
            if fresh_students and rng.random() < 0.4:
                roll = rng.choice(fresh_students)
            else:
                roll = rng.choice(hot if hot and rng.random() < 0.7 else list(student_dep))
            same = by_dep.get(student_dep[roll])
            if same and rng.random() < 0.5:
                same = [c for c in same if c in in_session] or same
            if fresh_courses and rng.random() < 0.3:
                code = rng.choice(fresh_courses)
            elif same and rng.random() < 0.8:
                code = rng.choice(same)
            else:
                code = rng.choice(list(course_dep))
            gpa = (Decimal(rng.randrange(0, 401)) / 100).quantize(Decimal("0.01"))
            rows.append((n, roll, code, gpa))
        batch["Results"] = rows
    return batch
