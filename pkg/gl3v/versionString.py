""" gl3v Version """

# Be sure to update the version before a release
vstr = '0.1.0'
