class Circle:
    """Old circle kept for compatibility.

    Parameters
    ----------
    r
        Radius.
    """
