#!/usr/bin/env python3
"""Generate the synthetic feedback-comment corpus used by the test suites.

The shared-task data cannot be redistributed, so this script produces a
deterministic stand-in with the same shape: pre-tokenized learner sentences,
one-based inclusive character spans, raw feedback comments with <term> and
<<citation>> markup, and a spaCy-style CoNLL-U parse aligned with every
train/dev line.

    python3 scripts/synth_corpus.py data/synthetic

Output is byte-identical for a given seed.
"""

import random
import sys
from pathlib import Path

SEED = 20220601
N_TRAIN = 4867
N_DEV = 169
N_TEST = 214
N_TEST_PAIRS = 10

SUBJECTS = ["They", "We", "People", "Students", "Parents", "Children", "Workers",
            "Teachers", "Friends", "Families", "Others", "Adults", "Girls", "Boys",
            "Neighbors", "Volunteers"]
HELP_VERBS = ["help", "support", "assist", "advise", "ask", "thank", "tell", "warn"]
RELATIVES = ["father", "mother", "brother", "sister", "uncle", "aunt", "teacher",
             "friend", "boss", "neighbor", "grandmother", "grandfather", "cousin",
             "classmate", "roommate", "coach"]
BAD_PREPS = ["about", "for", "to", "at", "on", "of", "by", "from"]
GOOD_PREPS = ["with", "in", "on", "for", "about"]
THINGS = ["money", "homework", "housework", "problems", "shopping", "cooking",
          "cleaning", "studies", "work", "bills", "travel", "plans", "health",
          "exams", "jobs", "rent", "debts", "errands", "chores", "paperwork"]
PLACES = ["city", "village", "university", "office", "school", "town", "library",
          "hospital", "station", "market"]
TIMES = ["day", "week", "month", "year", "weekend", "morning", "evening"]
INTRANSITIVE = ["agree", "listen", "complain", "arrive", "wait", "depend", "apologize",
                "belong", "respond", "reply", "object", "graduate", "participate",
                "succeed", "insist", "care"]
OBJ_PRONOUNS = ["it", "them", "him", "her", "this", "that"]
AUX = ["can", "must", "should", "will", "may", "might", "could", "would"]
BARE_VERBS = ["have", "get", "find", "make", "take", "keep", "do", "buy", "earn", "save",
              "spend", "learn", "need", "choose", "start", "try"]
OBJECTS = ["job", "car", "house", "book", "computer", "phone", "bicycle", "ticket",
           "present", "degree", "license", "room", "apartment", "guitar", "camera", "bag"]
ADJ = ["part-time", "new", "good", "cheap", "small", "big", "used", "second-hand",
       "nice", "better"]
TRANSITIVE = ["face", "discuss", "enter", "marry", "approach", "attend", "reach",
              "resemble", "contact", "visit", "consider", "mention"]
WRONG_PREP_TRANS = ["with", "about", "to", "into", "at", "on"]
DANGERS = ["danger", "problem", "risk", "difficulty", "issue", "topic", "question",
           "situation", "plan", "idea", "option", "matter"]
OF_NOUNS = ["battery", "machine", "system", "project", "company", "market", "country",
            "family", "team", "school", "city", "economy"]
ADV_NOUNS = ["advantages", "disadvantages", "benefits", "reasons", "ways", "chances",
             "merits", "drawbacks"]
QUANT = ["many", "some", "several", "few", "two", "three", "great", "clear"]
GERUNDS = ["Become", "Get", "Be", "Find", "Live", "Make", "Study", "Work", "Travel",
           "Learn"]
GERUND_ING = {"Become": "becoming", "Get": "getting", "Be": "being", "Find": "finding",
              "Live": "living", "Make": "making", "Study": "studying",
              "Work": "working", "Travel": "traveling", "Learn": "learning"}
COMPLEMENTS = ["student", "adult", "member", "worker", "citizen", "driver", "engineer",
               "doctor", "teacher", "nurse"]
MODIFIERS = ["college", "good", "real", "skilled", "young", "responsible", "famous",
             "local", "busy", "careful"]
PREDICATE_VERBS = ["requires", "needs", "takes", "demands", "costs", "involves"]
AMOUNTS = ["money", "time", "effort", "patience", "energy", "courage", "work",
           "practice"]
ARTICLE_VERBS = ["bought", "saw", "found", "sold", "borrowed", "lost", "wanted",
                 "needed", "rented", "ordered"]
COUNT_NOUNS = ["car", "dog", "book", "house", "ticket", "computer", "bicycle", "camera",
               "umbrella", "watch", "key", "table"]
PREP_LOC = ["in", "at", "near", "from"]
PLACES_DET = ["store", "shop", "market", "station", "park", "mall", "library", "airport"]


def tok(form, head, dep):
    return (form, head, dep)


def tail_place(start, root):
    # "in the city": start is the 1-based index of "in"
    place = random.choice(PLACES)
    return [tok("in", root, "prep"), tok("the", start + 2, "det"), tok(place, start, "pobj")]


def tail_time(start, root):
    return [tok("every", start + 1, "det"), tok(random.choice(TIMES), root, "npadvmod")]


def wrong_preposition():
    # S can V their N1 PREP N2 [tail] .
    subj, aux, verb = random.choice(SUBJECTS), random.choice(AUX), random.choice(HELP_VERBS)
    rel, bad, thing = random.choice(RELATIVES), random.choice(BAD_PREPS), random.choice(THINGS)
    good = random.choice([p for p in GOOD_PREPS if p != bad])
    toks = [tok(subj, 3, "nsubj"), tok(aux, 3, "aux"), tok(verb, 0, "ROOT"),
            tok("their", 5, "poss"), tok(rel, 3, "dobj"), tok(bad, 3, "prep"),
            tok(thing, 6, "pobj")]
    roll = random.random()
    if roll < 0.4:
        toks += tail_place(len(toks) + 1, 3)
    elif roll < 0.7:
        toks += tail_time(len(toks) + 1, 3)
    toks.append(tok(".", 3, "punct"))
    span = (5, 6)
    variants = [
        f"<<{bad.capitalize()}>> is not the appropriate <preposition> to be used when a <noun> "
        f"follows the structure <{verb} + someone>. Use '{good}' with '{thing}' instead.",
        f"<<{bad.capitalize()}>> is not the appropriate <preposition> after <<{verb}>> and "
        f"a <direct object> such as '{rel}'. Write '{verb} someone {good} {thing}'.",
        f"Look up the use of the <verb> <<{verb}>> in a dictionary to learn the appropriate "
        f"<preposition> to be used before '{thing}'; it is '{good}', not <<{bad}>>.",
    ]
    return toks, span, random.choice(variants)


def intransitive():
    # S V OBJ [tail] .   span covers "V OBJ"
    subj, verb, obj = random.choice(["I", "We", "They", "You"]), random.choice(INTRANSITIVE), \
        random.choice(OBJ_PRONOUNS)
    toks = [tok(subj, 2, "nsubj"), tok(verb, 0, "ROOT"), tok(obj, 2, "dobj")]
    if random.random() < 0.5:
        toks += tail_time(len(toks) + 1, 2)
    toks.append(tok(".", 2, "punct"))
    span = (1, 3)
    fixed = random.random() < 0.6
    if fixed:
        comment = (f"<<{verb.capitalize()}>> is an <intransitive verb> and thus it requires "
                   f"a <preposition> before its object.")
    else:
        comment = (f"<<{verb.capitalize()}>> is an <intransitive verb>, so put a "
                   f"<preposition> such as '{random.choice(GOOD_PREPS)}' before "
                   f"'{obj}' when the <verb> takes an object.")
    return toks, span, comment, fixed


def aux_to():
    # (Then) S AUX to V a ADJ N .   span "to"
    subj, aux, verb = random.choice(["I", "we", "they", "you", "he", "she"]), \
        random.choice(AUX), random.choice(BARE_VERBS)
    adj, obj = random.choice(ADJ), random.choice(OBJECTS)
    toks = [tok("Then", 5, "advmod"), tok(subj, 5, "nsubj"), tok(aux, 5, "aux"),
            tok("to", 5, "aux"), tok(verb, 0, "ROOT"), tok("a", 8, "det"),
            tok(adj, 8, "amod"), tok(obj, 5, "dobj"), tok(".", 5, "punct")]
    span = (3, 4)
    fixed = random.random() < 0.25
    if fixed:
        comment = ("<Verbs> that follow an <auxiliary verb> are used in their "
                   "<infinitive form> instead of a <to infinitive>.")
    else:
        comment = (f"<Verbs> that follow an <auxiliary verb> such as '{aux}' are used in "
                   f"their <infinitive form>, so write '{aux} {verb}' without <<to>>.")
    return toks, span, comment, fixed


def gerund_subject():
    # V MOD N PRED a lot of AMOUNT .   span V
    v, mod, n = random.choice(GERUNDS), random.choice(MODIFIERS), random.choice(COMPLEMENTS)
    pred, amount = random.choice(PREDICATE_VERBS), random.choice(AMOUNTS)
    toks = [tok(v, 4, "csubj"), tok(mod, 3, "compound"), tok(n, 1, "attr"),
            tok(pred, 0, "ROOT"), tok("a", 6, "det"), tok("lot", 4, "dobj"),
            tok("of", 6, "prep"), tok(amount, 7, "pobj"), tok(".", 4, "punct")]
    span = (0, 1)
    fixed = random.random() < 0.3
    if fixed:
        comment = ("A <verb phrase> needs to be converted into a <noun phrase> in the form "
                   "of a <to infinitive> or a <gerund> to be used as the <subject>.")
    else:
        comment = (f"A <verb phrase> such as <<{v}>> cannot be the <subject> of '{pred}'. "
                   f"Use the <gerund> '{GERUND_ING[v]}' to make it a <noun phrase>.")
    return toks, span, comment, fixed


def transitive_with_prep():
    # S AUX V WRONG the N of the M .   span WRONG
    subj, aux, verb = random.choice(SUBJECTS), random.choice(AUX), random.choice(TRANSITIVE)
    wrong, noun, ofn = random.choice(WRONG_PREP_TRANS), random.choice(DANGERS), \
        random.choice(OF_NOUNS)
    toks = [tok(subj, 3, "nsubj"), tok(aux, 3, "aux"), tok(verb, 0, "ROOT"),
            tok(wrong, 3, "prep"), tok("the", 6, "det"), tok(noun, 4, "pobj"),
            tok("of", 6, "prep"), tok("the", 9, "det"), tok(ofn, 7, "pobj"),
            tok(".", 3, "punct")]
    span = (3, 4)
    variants = [
        f"Since the <verb> <<{verb}>> is a <transitive verb> and its <direct object> "
        f"'{noun}' indicates the object, it does not require a <preposition>.",
        f"The <verb> <<{verb}>> is a <transitive verb>, so the <object> '{noun}' follows "
        f"it directly without <<{wrong}>>.",
        f"Remove the <preposition> <<{wrong}>>: <<{verb}>> takes '{noun}' as its "
        f"<direct object> when talking about the {ofn}.",
    ]
    return toks, span, random.choice(variants)


def advantages_to():
    # There are Q N to V a ADJ OBJ .   span "to V"
    q, n, v = random.choice(QUANT), random.choice(ADV_NOUNS), random.choice(BARE_VERBS)
    adj, obj = random.choice(ADJ), random.choice(OBJECTS)
    toks = [tok("There", 2, "expl"), tok("are", 0, "ROOT"), tok(q, 4, "amod"),
            tok(n, 2, "attr"), tok("to", 6, "aux"), tok(v, 4, "relcl"), tok("a", 9, "det"),
            tok(adj, 9, "amod"), tok(obj, 6, "dobj"), tok(".", 2, "punct")]
    span = (4, 6)
    comment = (f"Use <preposition + gerund> instead of a <to-infinitive> to describe the "
               f"'{n}'. Look up the use of the <noun> <<{n}>> in a dictionary, e.g. "
               f"'{n} of {v}ing'.")
    return toks, span, comment


def missing_article():
    # S VERB N PREP the PLACE .   span N
    subj, verb, n = random.choice(["I", "We", "He", "She", "They"]), \
        random.choice(ARTICLE_VERBS), random.choice(COUNT_NOUNS)
    prep, place = random.choice(PREP_LOC), random.choice(PLACES_DET)
    toks = [tok(subj, 2, "nsubj"), tok(verb, 0, "ROOT"), tok(n, 2, "dobj"),
            tok(prep, 2, "prep"), tok("the", 6, "det"), tok(place, 4, "pobj"),
            tok(".", 2, "punct")]
    span = (2, 3)
    fixed = random.random() < 0.2
    if fixed:
        comment = ("A singular <countable noun> needs an <article> such as 'a' or 'the' "
                   "before it.")
    else:
        comment = (f"<<{n.capitalize()}>> is a singular <countable noun>, so it needs an "
                   f"<indefinite article> when it is mentioned for the first time after "
                   f"'{verb}' and before '{prep} the {place}'.")
    return toks, span, comment, fixed


def sentence_final():
    # S VERB the N ADJ .  with span on the final word before "."
    subj, n = random.choice(["The", "This", "That"]), random.choice(COUNT_NOUNS)
    adj = random.choice(["interesting", "excited", "bored", "surprised", "tired",
                         "confused", "amazed", "annoyed"])
    good = {"interesting": "interested", "excited": "exciting", "bored": "boring",
            "surprised": "surprising", "tired": "tiring", "confused": "confusing",
            "amazed": "amazing", "annoyed": "annoying"}[adj]
    toks = [tok(subj, 2, "det"), tok(n, 5, "nsubj"), tok("was", 5, "cop"),
            tok("very", 5, "advmod"), tok(adj, 0, "ROOT"), tok(".", 5, "punct")]
    span = (4, 5)
    comment = (f"<<{adj}>> describes how a person feels. Use the <adjective> '{good}' "
               f"to describe the <noun> '{n}' itself.")
    return toks, span, comment


GENERATORS = [
    (wrong_preposition, 0.26),
    (intransitive, 0.12),
    (aux_to, 0.12),
    (gerund_subject, 0.10),
    (transitive_with_prep, 0.16),
    (advantages_to, 0.08),
    (missing_article, 0.10),
    (sentence_final, 0.06),
]

WORKED_SENTENCE = ("They can help their father or mother about money that we must use in "
                  "the university too .")
WORKED_COMMENT = ("<<About>> is not the appropriate <preposition> to be used when a <noun> "
                 "follows the structure <help + someone>. Look up the use of the <verb> "
                 "<<help>> in a dictionary to learn the appropriate <preposition> to be used.")
WORKED_PARSE = [
    ("They", 3, "nsubj"), ("can", 3, "aux"), ("help", 0, "ROOT"), ("their", 5, "poss"),
    ("father", 3, "dobj"), ("or", 5, "cc"), ("mother", 5, "conj"), ("about", 3, "prep"),
    ("money", 8, "pobj"), ("that", 13, "dobj"), ("we", 13, "nsubj"), ("must", 13, "aux"),
    ("use", 9, "relcl"), ("in", 13, "prep"), ("the", 16, "det"), ("university", 14, "pobj"),
    ("too", 13, "advmod"), (".", 3, "punct"),
]
AGREE_PARSE = [("I", 2, "nsubj"), ("agree", 0, "ROOT"), ("it", 2, "dobj"), (".", 2, "punct")]
AGREE_COMMENT = ("<<Agree>> is an <intransitive verb> and thus it requires a <preposition> "
                 "before its object.")


def one_based_span(forms, span):
    """Character span in the corpus convention (one-based start, inclusive end)."""
    starts, pos = [], 0
    for f in forms:
        starts.append(pos)
        pos += len(f) + 1
    first, last = span[0], span[1] - 1
    return starts[first] + 1, starts[last] + len(forms[last])


def draw():
    gens, weights = zip(*GENERATORS)
    gen = random.choices(gens, weights)[0]
    out = gen()
    return out[0], out[1], out[2]


def conllu_block(toks, sent_id):
    forms = [t[0] for t in toks]
    lines = [f"# sent_id = {sent_id}", f"# text = {' '.join(forms)}"]
    for i, (form, head, dep) in enumerate(toks, start=1):
        upos = "PUNCT" if dep == "punct" else "_"
        lines.append(f"{i}\t{form}\t{form.lower()}\t{upos}\t_\t_\t{head}\t{dep}\t_\t_")
    return "\n".join(lines) + "\n"


def emit(path_stem, rows, with_comments, with_parse):
    tsv, conllu = [], []
    for i, (toks, span, comment) in enumerate(rows, start=1):
        forms = [t[0] for t in toks]
        s, e = one_based_span(forms, span)
        fields = [" ".join(forms), f"{s}:{e}"]
        if with_comments:
            fields.append(comment)
        tsv.append("\t".join(fields))
        if with_parse:
            conllu.append(conllu_block(toks, f"{path_stem.name}-{i}"))
    path_stem.with_suffix(".tsv").write_text("\n".join(tsv) + "\n", encoding="utf-8")
    if with_parse:
        path_stem.with_suffix(".conllu").write_text("\n".join(conllu), encoding="utf-8")


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data/synthetic")
    out.mkdir(parents=True, exist_ok=True)
    random.seed(SEED)

    train = [(WORKED_PARSE, (7, 8), WORKED_COMMENT), (AGREE_PARSE, (1, 3), AGREE_COMMENT)]
    while len(train) < N_TRAIN:
        train.append(draw())
    dev = [draw() for _ in range(N_DEV)]

    test = []
    for _ in range(N_TEST_PAIRS):
        toks, span, _ = transitive_with_prep()
        # same sentence, second span on the "of" phrase
        test.append((toks, span, None))
        test.append((toks, (6, 7), None))
    seen = {tuple(t[0]) for t in test}
    while len(test) < N_TEST:
        toks, span, _ = draw()
        if tuple(toks) in seen:
            continue
        seen.add(tuple(toks))
        test.append((toks, span, None))

    emit(out / "train", train, True, True)
    emit(out / "dev", dev, True, True)
    emit(out / "test", test, False, False)


if __name__ == "__main__":
    main()
