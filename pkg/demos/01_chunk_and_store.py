"""
Cleaning a messy document and splitting it into fixed-size passages
===================================================================
"""

from deskdpr.corpus import build_store, chunk_document, clean_document

# raw text as it arrives: stray tabs, control characters, uneven spacing
raw = (
    "Mycobacterium tuberculosis persists\tin a dormant state.\x0b  The DosR "
    "regulon   controls the transition, and dormancy ends when oxygen returns."
)

doc = clean_document(raw, title="Dormancy programs", doc_id="demo1")
print("cleaned body:")
print(" ", doc.body)

# every chunk except the last holds exactly chunk_size words
chunks = chunk_document(doc, chunk_size=8)
for p in chunks:
    print(f"{p.passage_id}: {p.text}")

# joining the chunks reproduces the cleaned body word for word
assert " ".join(p.text for p in chunks) == doc.body

# a store keyed by passage id is what every later stage consumes
store = build_store([doc], chunk_size=8)
print("store size:", len(store))
print("lookup chunk 1:", store.get("demo1#1").text)
