"""Fixed English stopword list used by segment similarity.

Kept built-in and frozen so similarity matrices are reproducible across
environments. Applied only when building the pairwise similarity matrix;
quality features and ROUGE see all words.
"""

STOPWORDS = frozenset("""
a about above after again against all am an and any are as at
be because been before being below between both but by
can cannot could
did do does doing down during
each either
few for from further
had has have having he her here hers herself him himself his how
i if in into is it its itself
just
me more most my myself
no nor not now
of off on once only or other our ours ourselves out over own
said same she should so some such
than that the their theirs them themselves then there these they this
those through to too
under until up upon
very
was we were what when where which while who whom why will with would
you your yours yourself yourselves
's 't 've 'll 'd 're
one two three also among
""".split())
